"""Figure specification and CSV schema validation."""

import csv
import json
from dataclasses import dataclass, field


class SchemaError(ValueError):
    """Input CSV header does not match the expected harness schema."""


KINDS = ("rate_plot", "uniformity_plot", "field_heatmap", "kernel_quiver")

# expected header per figure kind; the harness is the producer of record
SCHEMAS = {
    "rate_plot": ["t", "N", "k", "h_k", "h_k_err", "l1_k", "l1_k_err",
                  "w2_k", "w2_k_err", "w2_emp", "w2_emp_err", "A_N", "B_N"],
    "uniformity_plot": ["t", "N", "k", "h_k", "h_k_err", "l1_k", "l1_k_err",
                        "w2_k", "w2_k_err", "w2_emp", "w2_emp_err", "A_N", "B_N"],
    "field_heatmap": ["x1", "x2", "rho"],
    "kernel_quiver": ["x1", "x2", "k1", "k2"],
}


@dataclass
class FigureSpec:
    inputs: list                 # csv path(s)
    kind: str                    # one of KINDS
    out: str                     # output .svg or .png path
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    reference_curve: bool = True  # rate_plot only: overlay c N^-1/2 ln(1+N)
    column: str = "w2_k"          # rate/uniformity: which error column to draw
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if isinstance(self.inputs, str):
            self.inputs = [self.inputs]
        if not self.out.endswith((".svg", ".png")):
            raise ValueError("output path must end in .svg or .png")

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls(**json.load(f))


def load_rows(path, kind):
    """Read a CSV, enforcing the schema for the given figure kind.

    Returns a list of dicts with float values.  A wrong header raises
    SchemaError with an explicit column diff; an empty file (or header
    with no data rows) raises SchemaError as well.
    """
    expected = SCHEMAS[kind]
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header") from None
        if header != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            raise SchemaError(
                f"{path}: header mismatch for {kind}: "
                f"missing columns {missing}, unexpected columns {extra}"
            )
        rows = [dict(zip(header, map(float, line))) for line in reader if line]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows
