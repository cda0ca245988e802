"""
Solver settings shared by the ODE and PDE engines.
"""

from dataclasses import dataclass, replace

from tyclab.utils.validators import require_nonnegative, require_positive


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Step-size control, horizon and event thresholds (all in dimensionless units).

    Defaults separate "settles" from "diverges" comfortably: every negativity or
    blow-up event of interest happens well before t = 50.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    h_init: float = 1e-4
    h_min: float = 1e-12
    h_max: float = 0.1
    t_end: float = 50.0
    blowup_cutoff: float = 1e8
    neg_eps: float = 1e-9
    sample_dt: float = 1e-3

    def __post_init__(self) -> None:
        require_positive("abs_tol", self.abs_tol)
        require_positive("rel_tol", self.rel_tol)
        require_positive("h_min", self.h_min)
        require_positive("t_end", self.t_end)
        require_positive("sample_dt", self.sample_dt)
        require_nonnegative("neg_eps", self.neg_eps)
        if not self.h_min <= self.h_init <= self.h_max:
            raise ValueError("step bounds must satisfy 0 < h_min <= h_init <= h_max")
        if self.blowup_cutoff < 1e3:
            raise ValueError("blowup_cutoff must be >= 1e3")

    def scaled_tolerances(self, factor: float) -> "IntegratorConfig":
        """Copy with abs_tol and rel_tol multiplied by ``factor``."""
        return replace(
            self, abs_tol=self.abs_tol * factor, rel_tol=self.rel_tol * factor
        )
