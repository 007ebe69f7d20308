"""
Parameter containers for the mixed difference INGARCH model

theta = (phi, psi1, psi2) where phi = (c, a, b) drives the sign probability
and psi_s = (omega_s, alpha_s1..alpha_sq, beta_s1..beta_sp) drives the
conditional mean of side s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from mdingarch.core.exceptions import DataFormatError, ParameterDomainError


class Side(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class Family(str, Enum):
    POISSON = "pois"
    NEG_BINOMIAL = "nb"


class InitPolicy(str, Enum):
    """Starting values for the filters.

    STATIONARY: lambda_s0 = omega_s / (1 - sum beta_s), pi_0 = c / (1 - b).
    SAMPLE_MEAN: lambda_10 = mean of Y over Y >= 0, lambda_20 = mean of -Y over
    Y < 0, pi_0 = mean of B.
    Both use B_0 = 1 and zero observation lags.
    """

    STATIONARY = "stationary"
    SAMPLE_MEAN = "sample-mean"


@dataclass(frozen=True)
class ModelOrder:
    p: int = 1
    q: int = 1

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise ParameterDomainError(f"order needs p, q >= 0 and p + q >= 1, got p={self.p}, q={self.q}")

    @property
    def r(self) -> int:
        return max(self.p, self.q)

    @property
    def psi_dim(self) -> int:
        return self.p + self.q + 1

    @property
    def dim(self) -> int:
        return 2 * (self.p + self.q) + 3


@dataclass(frozen=True)
class PhiParams:
    c: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.c > 0 and self.a >= 0 and self.b >= 0):
            raise ParameterDomainError(f"phi needs c > 0, a >= 0, b >= 0, got {self.as_tuple()}")
        if not self.a + self.b + self.c < 1:
            raise ParameterDomainError(f"phi needs a + b + c < 1, got {self.a + self.b + self.c:.6g}")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.c, self.a, self.b)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "PhiParams":
        c, a, b = (float(v) for v in values)
        return cls(c, a, b)


@dataclass(frozen=True)
class PsiParams:
    omega: float
    alpha: Tuple[float, ...]
    beta: Tuple[float, ...]
    side: Side = Side.POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        label = "psi1" if self.side is Side.POSITIVE else "psi2"
        values = (self.omega, *self.alpha, *self.beta)
        if not all(math.isfinite(v) for v in values):
            raise ParameterDomainError(f"{label} has non-finite entries: {values}")
        if any(v < 0 for v in self.alpha + self.beta):
            raise ParameterDomainError(f"{label} needs alpha, beta >= 0")
        slack = 1.0 - sum(self.beta)
        if slack <= 0:
            raise ParameterDomainError(f"{label} needs sum(beta) < 1, got {sum(self.beta):.6g}")
        if self.side is Side.POSITIVE and self.omega <= 0:
            raise ParameterDomainError(f"psi1 needs omega > 0, got {self.omega:.6g}")
        if self.side is Side.NEGATIVE and not slack < self.omega:
            raise ParameterDomainError(
                f"psi2 needs 1 - sum(beta) < omega, got {slack:.6g} >= {self.omega:.6g}"
            )

    @property
    def q(self) -> int:
        return len(self.alpha)

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def persistence(self) -> float:
        return sum(self.alpha) + sum(self.beta)

    def as_array(self) -> np.ndarray:
        return np.array((self.omega, *self.alpha, *self.beta), dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float], order: ModelOrder, side: Side) -> "PsiParams":
        values = [float(v) for v in values]
        if len(values) != order.psi_dim:
            raise ParameterDomainError(f"expected {order.psi_dim} values for {side.value} block, got {len(values)}")
        return cls(values[0], tuple(values[1:1 + order.q]), tuple(values[1 + order.q:]), side)


@dataclass(frozen=True)
class Theta:
    phi: PhiParams
    psi1: PsiParams
    psi2: PsiParams
    order: ModelOrder = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.psi1.side is not Side.POSITIVE or self.psi2.side is not Side.NEGATIVE:
            raise ParameterDomainError("psi1 must be the positive block and psi2 the negative block")
        if (self.psi1.p, self.psi1.q) != (self.psi2.p, self.psi2.q):
            raise ParameterDomainError("psi1 and psi2 must share the same order")
        derived = ModelOrder(self.psi1.p, self.psi1.q)
        if self.order is None:
            object.__setattr__(self, "order", derived)
        elif self.order != derived:
            raise ParameterDomainError(f"order {self.order} does not match the psi blocks {derived}")

    @property
    def dim(self) -> int:
        return self.order.dim

    def vector(self) -> np.ndarray:
        return np.concatenate([self.phi.as_array(), self.psi1.as_array(), self.psi2.as_array()])

    @classmethod
    def from_vector(cls, values: Sequence[float], order: ModelOrder, validate: bool = True) -> "Theta":
        """Build from (c, a, b, psi1, psi2).

        validate=False skips the domain checks; used for perturbed values such as
        bootstrap Newton steps and for analysing parameters outside the
        stationary region.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (order.dim,):
            raise ParameterDomainError(f"expected a vector of length {order.dim}, got shape {values.shape}")
        k = order.psi_dim
        if not validate:
            return _unchecked(
                cls,
                phi=_unchecked(PhiParams, c=values[0], a=values[1], b=values[2]),
                psi1=_unchecked_psi(values[3:3 + k], order, Side.POSITIVE),
                psi2=_unchecked_psi(values[3 + k:], order, Side.NEGATIVE),
                order=order,
            )
        return cls(
            PhiParams.from_array(values[:3]),
            PsiParams.from_array(values[3:3 + k], order, Side.POSITIVE),
            PsiParams.from_array(values[3 + k:], order, Side.NEGATIVE),
            order,
        )

    @classmethod
    def linear11(cls, c, a, b, omega1, alpha1, beta1, omega2, alpha2, beta2) -> "Theta":
        return cls(
            PhiParams(c, a, b),
            PsiParams(omega1, (alpha1,), (beta1,), Side.POSITIVE),
            PsiParams(omega2, (alpha2,), (beta2,), Side.NEGATIVE),
        )

    def to_dict(self) -> dict:
        def block(psi: PsiParams) -> dict:
            return {"omega": psi.omega, "alpha": list(psi.alpha), "beta": list(psi.beta)}

        return {
            "order": {"p": self.order.p, "q": self.order.q},
            "phi": {"c": self.phi.c, "a": self.phi.a, "b": self.phi.b},
            "psi1": block(self.psi1),
            "psi2": block(self.psi2),
        }

    @classmethod
    def from_dict(cls, data: dict, validate: bool = True) -> "Theta":
        """Build from a parameter document.

        validate=False keeps the phi checks but builds the psi blocks unchecked,
        so documents outside the stationary region (sum(beta) >= 1) can still
        be analysed.
        """
        try:
            phi = data["phi"]
            phi_params = PhiParams(float(phi["c"]), float(phi["a"]), float(phi["b"]))
            blocks = [
                (float(data[key]["omega"]), _as_list(data[key]["alpha"]), _as_list(data[key]["beta"]))
                for key in ("psi1", "psi2")
            ]
        except (KeyError, TypeError) as exc:
            raise DataFormatError(f"malformed parameter document: missing or invalid {exc}") from exc

        if validate:
            return cls(
                phi_params,
                PsiParams(*blocks[0], Side.POSITIVE),
                PsiParams(*blocks[1], Side.NEGATIVE),
            )

        (omega1, alpha1, beta1), (omega2, alpha2, beta2) = blocks
        if (len(alpha1), len(beta1)) != (len(alpha2), len(beta2)):
            raise ParameterDomainError("psi1 and psi2 must share the same order")
        values = [omega1, *alpha1, *beta1, omega2, *alpha2, *beta2]
        if not all(math.isfinite(v) for v in values) or any(v < 0 for v in alpha1 + beta1 + alpha2 + beta2):
            raise ParameterDomainError("psi blocks need finite entries with alpha, beta >= 0")
        order = ModelOrder(len(beta1), len(alpha1))
        return cls.from_vector([*phi_params.as_array(), *values], order, validate=False)


def _unchecked(cls, **values):
    obj = object.__new__(cls)
    for name, value in values.items():
        object.__setattr__(obj, name, float(value) if isinstance(value, (np.floating, int, float)) else value)
    return obj


def _unchecked_psi(values: np.ndarray, order: ModelOrder, side: Side) -> PsiParams:
    return _unchecked(
        PsiParams,
        omega=values[0],
        alpha=tuple(float(v) for v in values[1:1 + order.q]),
        beta=tuple(float(v) for v in values[1 + order.q:]),
        side=side,
    )


def _as_list(value) -> List[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def parameter_names(order: ModelOrder) -> List[str]:
    """Labels in vector order: c, a, b, omega1, alpha1, beta1, omega2, ..."""
    names = ["c", "a", "b"]
    for s in (1, 2):
        names.append(f"omega{s}")
        names.extend(f"alpha{s}" if order.q == 1 else f"alpha{s}_{i}" for i in range(1, order.q + 1))
        names.extend(f"beta{s}" if order.p == 1 else f"beta{s}_{j}" for j in range(1, order.p + 1))
    return names


def block_slices(order: ModelOrder) -> Tuple[slice, slice, slice]:
    """Positions of phi, psi1 and psi2 inside the full parameter vector."""
    k = order.psi_dim
    return slice(0, 3), slice(3, 3 + k), slice(3 + k, 3 + 2 * k)


@dataclass(frozen=True)
class SeriesZ:
    """An observed integer series; sign indicators b_t = 1{y_t >= 0} are derived."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1:
            raise ParameterDomainError(f"series must be one-dimensional, got shape {y.shape}")
        if y.dtype.kind == "f":
            if not np.all(np.isfinite(y)) or not np.all(y == np.round(y)):
                raise ParameterDomainError("series must contain integers only")
        elif y.dtype.kind not in "iu":
            raise ParameterDomainError(f"series must contain integers, got dtype {y.dtype}")
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "SeriesZ":
        return cls(np.fromiter((int(v) for v in values), dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def b(self) -> np.ndarray:
        return (self.y >= 0).astype(np.int64)

    @property
    def n_nonnegative(self) -> int:
        return int(np.count_nonzero(self.y >= 0))

    @property
    def n_negative(self) -> int:
        return self.n - self.n_nonnegative

    def __len__(self) -> int:
        return self.n

    def head(self, m: int) -> "SeriesZ":
        return SeriesZ(self.y[:m])


def load_theta(path: Union[str, Path]) -> Theta:
    """Read a parameter document; a DGP document's extra keys are ignored here."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=str(path)) from exc
    except OSError as exc:
        raise DataFormatError(f"cannot read parameter file: {exc.strerror}", path=str(path)) from exc
    return Theta.from_dict(data)
