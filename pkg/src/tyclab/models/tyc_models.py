"""
Right-hand sides of the TYC model family.

Every rate function works on numpy arrays, so the same code evaluates a single state
(ODE engine) or a whole grid of states (PDE engine, positivity face sampling). The
public ``rhs_*`` functions wrap the array kernels for single StateVector values.

Models:
  - Classic3        f' = r m f L - f,  m' = r m f L + 2 r s f L - m,  s' = gamma - s
  - ExpLogistic3    as Classic3 with L replaced by exp(1 - (f + m + s))
  - ModifiedAllee   mating shares m/(m+s), s/(m+s) and Allee factor (f/a - 1)
  - ModifiedNoAllee as ModifiedAllee with the Allee factor set to 1
  - Classic4        dimensional four-species system with trojan females r4
"""

from typing import Tuple, Union

import numpy as np

from tyclab.models.params import (
    DimensionalParams,
    DimensionlessParams,
    ModelFamily,
    ModelKind,
    ModelSpec,
    StateVector,
)

ArrayLike = Union[float, np.ndarray]


def _logistic_linear(f: ArrayLike, m: ArrayLike, s: ArrayLike, K: float = 1.0):
    return 1.0 - (f + m + s) / K


def _logistic_exp(f: ArrayLike, m: ArrayLike, s: ArrayLike):
    return np.exp(1.0 - (f + m + s))


def logistic(
    state: StateVector, kind: Union[ModelKind, ModelFamily], K: float = 1.0
) -> float:
    """
    Logistic damping factor for a state.

    The dimensionless models use K = 1. For Classic4 the factor is
    1 - (f + m + s)/K exactly as in the four-species equations: trojan females do not
    enter the carrying-capacity penalty.
    """
    family = kind.kind if isinstance(kind, ModelKind) else kind
    if family is ModelFamily.EXP_LOGISTIC3:
        return float(_logistic_exp(state.f, state.m, state.s))
    return float(_logistic_linear(state.f, state.m, state.s, K))


# --- array kernels -------------------------------------------------------------------


def _classic_rates(r: float, gamma: float, f, m, s, L) -> Tuple:
    mating = r * m * f * L
    return mating - f, mating + 2.0 * r * s * f * L - m, gamma - s + 0.0 * f


def _mating_share(numerator, total):
    """numerator/total, defined as 0 where the male pool m + s vanishes."""
    numerator = np.asarray(numerator, dtype=float)
    total = np.asarray(total, dtype=float)
    out = np.zeros(np.broadcast(numerator, total).shape)
    return np.divide(numerator, total, out=out, where=total != 0.0)


def _modified_rates(p: DimensionlessParams, f, m, s, allee_on: bool) -> Tuple:
    L = _logistic_linear(f, m, s)
    allee = (f / p.allee - 1.0) if allee_on else 1.0
    pool = m + s
    df = p.r * L * allee * _mating_share(m, pool) * f * m - f
    dm = p.r * L * f * allee * _mating_share(m * m + 2.0 * s * s, pool) - m
    ds = p.gamma - s + 0.0 * f
    return df, dm, ds


def _classic3_dimensional_rates(p: DimensionalParams, f, m, s) -> Tuple:
    L = _logistic_linear(f, m, s, p.K)
    df = 0.5 * p.beta * L * f * m - p.delta * f
    dm = 0.5 * p.beta * L * f * m + p.beta * L * f * s - p.delta * m
    ds = p.mu - p.delta * s + 0.0 * f
    return df, dm, ds


def _classic4_rates(p: DimensionalParams, f, m, s, r4) -> Tuple:
    L = _logistic_linear(f, m, s, p.K)
    df = 0.5 * p.beta * L * f * m - p.delta * f
    dm = (0.5 * f * m + 0.5 * r4 * m + f * s) * p.beta * L - p.delta * m
    ds = (0.5 * r4 * m + r4 * s) * p.beta * L - p.delta * s
    dr = p.mu - p.delta * r4 + 0.0 * f
    return df, dm, ds, dr


def reaction_terms(model: ModelSpec, u: np.ndarray) -> np.ndarray:
    """Stacked reaction rates for ``model``; the leading axis of ``u`` is species."""
    u = np.asarray(u, dtype=float)
    p = model.params
    family = model.family

    if family is ModelFamily.CLASSIC4:
        rates = _classic4_rates(p, u[0], u[1], u[2], u[3])
    elif family is ModelFamily.CLASSIC3 and isinstance(p, DimensionalParams):
        rates = _classic3_dimensional_rates(p, u[0], u[1], u[2])
    elif family is ModelFamily.CLASSIC3:
        rates = _classic_rates(p.r, p.gamma, u[0], u[1], u[2], _logistic_linear(*u))
    elif family is ModelFamily.EXP_LOGISTIC3:
        rates = _classic_rates(p.r, p.gamma, u[0], u[1], u[2], _logistic_exp(*u))
    elif family is ModelFamily.MODIFIED_ALLEE:
        rates = _modified_rates(p, u[0], u[1], u[2], allee_on=True)
    else:
        rates = _modified_rates(p, u[0], u[1], u[2], allee_on=False)

    return np.stack([np.broadcast_to(r, u.shape[1:]) for r in rates])


# --- single-state entry points -------------------------------------------------------


def _as_state(rates, species=("f", "m", "s")) -> StateVector:
    return StateVector.from_array([float(v) for v in rates], species)


def rhs_classic3(p: DimensionlessParams, x: StateVector) -> StateVector:
    """Time derivative of the dimensionless three-species system."""
    L = _logistic_linear(x.f, x.m, x.s)
    return _as_state(_classic_rates(p.r, p.gamma, x.f, x.m, x.s, L))


def rhs_exp_logistic3(p: DimensionlessParams, x: StateVector) -> StateVector:
    """Classic3 with the exponential logistic factor in the f and m equations."""
    E = _logistic_exp(x.f, x.m, x.s)
    return _as_state(_classic_rates(p.r, p.gamma, x.f, x.m, x.s, E))


def rhs_classic3_dimensional(p: DimensionalParams, x: StateVector) -> StateVector:
    """Time derivative of the three-species system in beta/delta/K/mu form."""
    return _as_state(_classic3_dimensional_rates(p, x.f, x.m, x.s))


def rhs_classic4(p: DimensionalParams, x: StateVector) -> StateVector:
    """Reaction terms of the four-species system (f, m, s, r4)."""
    if x.r4 is None:
        raise ValueError("Classic4 requires the trojan-female population r4")
    rates = _classic4_rates(p, x.f, x.m, x.s, x.r4)
    return _as_state(rates, ("f", "m", "s", "r4"))


def rhs_modified(
    p: DimensionlessParams, x: StateVector, allee_on: bool = True
) -> StateVector:
    """
    Time derivative of the mate-competition model, with or without the Allee factor.

    When m + s = 0 both mating shares are taken as 0.
    """
    if allee_on and p.allee is None:
        raise ValueError("the Allee variant requires p.allee")
    return _as_state(_modified_rates(p, x.f, x.m, x.s, allee_on))


def nondimensionalize(
    p: DimensionalParams, x_dim: StateVector
) -> Tuple[DimensionlessParams, StateVector]:
    """
    Scale populations by K and time by 1/delta.

    Returns r = beta*K/(2*delta), gamma = mu/(delta*K) and diffusion = D/delta,
    together with the state divided by K.
    """
    if p.K <= 0 or p.delta <= 0:
        raise ValueError("nondimensionalization requires K > 0 and delta > 0")
    scaled = DimensionlessParams(
        r=p.beta * p.K / (2.0 * p.delta),
        gamma=p.mu / (p.delta * p.K),
        diffusion=p.D / p.delta,
    )
    r4 = None if x_dim.r4 is None else x_dim.r4 / p.K
    state = StateVector(x_dim.f / p.K, x_dim.m / p.K, x_dim.s / p.K, r4)
    return scaled, state
