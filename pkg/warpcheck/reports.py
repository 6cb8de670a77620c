"""
Report types shared by the classification, certificate and verification
operations. Each report keeps its per-sample residuals as a DataFrame.
"""
from dataclasses import dataclass, field, fields
import math
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd


def native(value):
    """Convert numpy scalars and containers to plain Python for json."""
    if isinstance(value, dict):
        return {str(k): native(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [native(v) for v in value]
    if isinstance(value, np.ndarray):
        return [native(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        # json has no inf/nan
        if math.isnan(value) or math.isinf(value):
            return repr(value)
        return value
    return value


@dataclass
class Report:
    """
    Outcome of one sampled operation.

    Attributes:
        operation (str): Name of the operation that produced the report
        verdict (str): Human-readable classification
        passed (bool): Whether the checked property holds at every sample
        worst_residual (float): Largest residual over samples
        witness (dict): Point where the worst residual occurred
        derived (dict): Derived constants (factors, λ, μ, ...)
        notes (list): Precondition failures, printed-form disagreements
        table (pd.DataFrame): Per-sample residual table
    """
    operation: str
    verdict: str
    passed: bool
    worst_residual: float = 0.0
    witness: Optional[Dict[str, float]] = None
    derived: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    precondition_met: bool = True
    table: pd.DataFrame = field(default_factory=pd.DataFrame)

    kind = 'report'

    def note(self, message):
        self.notes.append(message)

    def to_dict(self):
        out = {'kind': self.kind}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == 'table':
                value = [native(row) for row in value.to_dict(orient='records')]
            out[f.name] = native(value)
        return out

    @classmethod
    def from_dict(cls, data):
        report_cls = REPORT_KINDS.get(data.get('kind'), cls)
        kwargs = {f.name: data[f.name] for f in fields(report_cls) if f.name in data}
        kwargs['table'] = pd.DataFrame.from_records(data.get('table') or [])
        return report_cls(**kwargs)


@dataclass
class ClassificationReport(Report):
    kind = 'classification'


@dataclass
class SolitonCertificate(Report):
    residual_norms: List[float] = field(default_factory=list)

    kind = 'soliton'


@dataclass
class VerificationReport(Report):
    """Closed form against the brute-force oracle."""
    kind = 'verification'


REPORT_KINDS = {
    'report': Report,
    'classification': ClassificationReport,
    'soliton': SolitonCertificate,
    'verification': VerificationReport,
}


def sample_table(points, coords, **columns):
    """Residual table with one row per sample point."""
    data = {x: [p[x] for p in points] for x in coords}
    data.update(columns)
    return pd.DataFrame(data)


def witness_of(points, residuals):
    if not len(points):
        return None
    return points[int(np.argmax(residuals))].as_dict()
