"""Exact spectral bifurcation analysis on CP^1 x CP^1 x CP^1.

The path of metrics ``omega_lam = V^{-1/3}(w_FS + w_FS + lam w_FS)`` with
``V = (4 pi)^3 lam`` is cscK with ``S(lam) = 2 (2 + 1/lam) V^{1/3}``. The
linearisation ``A(lam) = -(2/3) S(lam) + Delta_{omega_lam}`` acts on the
product eigenfunction with levels ``(j1, j2, j3)`` by

    V^{1/3} * (mu1 + mu2 + mu3/lam - (4/3)(2 + 1/lam)),   mu = j(j+1).

Everything here is exact rational arithmetic. Irrational positive factors
(``V^{1/3}`` and the transversality prefactor) are carried as string tags.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

DEFAULT_JMAX = 10
DENOMINATOR_CAP = 10**6
QUARTER = Fraction(1, 4)


class RationalConversionWarning(UserWarning):
    pass


def as_fraction(x) -> Fraction:
    """Exact rational from int/Fraction/str, or capped conversion from float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    q = Fraction(x).limit_denominator(DENOMINATOR_CAP)
    if Fraction(x) != q:
        warnings.warn(f"{x!r} converted to {q} (denominator cap {DENOMINATOR_CAP})", RationalConversionWarning)
    return q


@dataclass(frozen=True)
class EigenLevel:
    j: int

    @property
    def mu(self) -> int:
        return self.j * (self.j + 1)

    @property
    def multiplicity(self) -> int:
        return 2 * self.j + 1


def cp1_levels(j_max: int) -> list[EigenLevel]:
    """Eigenvalues ``j(j+1)`` of the Fubini-Study Laplacian, ``j <= j_max``."""
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    return [EigenLevel(j) for j in range(j_max + 1)]


@dataclass(frozen=True)
class ProductSpectralModel:
    lam: Fraction
    j_max: int = DEFAULT_JMAX

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        if self.lam <= 0:
            raise ValueError("lambda must be positive")

    @property
    def volume(self) -> float:
        return (4 * math.pi) ** 3 * float(self.lam)

    @property
    def scalar(self) -> float:
        return 2 * (2 + 1 / float(self.lam)) * self.volume ** (1 / 3)

    def reduced_eigenvalue(self, triple) -> Fraction:
        """Eigenvalue of ``A(lam) / V^{1/3}`` on the level triple."""
        m1, m2, m3 = (EigenLevel(j).mu for j in triple)
        lam = self.lam
        return m1 + m2 + Fraction(m3) / lam - Fraction(4, 3) * (2 + 1 / lam)


@dataclass(frozen=True)
class KernelFamily:
    triple: tuple
    dimension: int
    multiplier: Fraction
    prefactor: str
    provenance: str

    def as_dict(self):
        return dict(
            triple=list(self.triple),
            dimension=self.dimension,
            multiplier=str(self.multiplier),
            prefactor=self.prefactor,
            provenance=self.provenance,
        )


def _dimension(triple) -> int:
    return math.prod(EigenLevel(j).multiplicity for j in triple)


def kernel_triples(lam, j_max=DEFAULT_JMAX) -> list[tuple]:
    model = ProductSpectralModel(as_fraction(lam), j_max)
    return [t for t in product(range(j_max + 1), repeat=3) if model.reduced_eigenvalue(t) == 0]


def transversality_multiplier(triple, lam) -> tuple[Fraction, str, str]:
    """Scalar by which ``d^2 F / df dlam`` acts on a level triple.

    Writing ``A = 4 pi lam^{1/3} K(lam)`` with
    ``K = mu1 + mu2 + mu3/lam - (4/3)(2 + 1/lam)``,

        dA/dlam = (4 pi / 3) lam^{-5/3} (lam K + 3 lam^2 K')
                = (4 pi / 3) lam^{-5/3} ((8/3)(1 - lam) + lam (mu1 + mu2) - 2 mu3).

    At ``lam = 1/4`` this is ``(4 pi / 3) 4^{2/3} (8 + mu1 + mu2 - 8 mu3)``,
    which is the form returned there.
    """
    lam = as_fraction(lam)
    m1, m2, m3 = (EigenLevel(j).mu for j in triple)
    if lam == QUARTER:
        return Fraction(8 + m1 + m2 - 8 * m3), "(4*pi/3)*4^(2/3)", "closed form at 1/4"
    value = Fraction(8, 3) * (1 - lam) + lam * (m1 + m2) - 2 * m3
    return value, f"(4*pi/3)*({lam})^(-5/3)", "extension beyond the 1/4 closed form"


def kernel_families(lam, j_max=DEFAULT_JMAX) -> list[KernelFamily]:
    """Level triples in ``ker A(lam)`` with their dimensions and multipliers."""
    lam = as_fraction(lam)
    out = []
    for t in kernel_triples(lam, j_max):
        value, pref, prov = transversality_multiplier(t, lam)
        out.append(KernelFamily(t, _dimension(t), value, pref, prov))
    return out


def transversality_multipliers(lam0) -> dict:
    """Multiplier per kernel family at ``lam0``; raises if any vanishes."""
    fams = kernel_families(lam0, required_jmax(lam0, lam0))
    out = {f.triple: f.multiplier for f in fams}
    zero = [t for t, m in out.items() if m == 0]
    if zero:
        raise ArithmeticError(f"transversality fails on {zero} at lambda = {lam0}")
    return out


def crossing_lambda(triple):
    """The unique ``lam`` where ``triple`` lies in the kernel, or None.

    ``lam = (4 - 3 mu3) / (3 (mu1 + mu2) - 8)``; the denominator never vanishes
    because ``mu1 + mu2`` is an integer.
    """
    m1, m2, m3 = (EigenLevel(j).mu for j in triple)
    den = 3 * (m1 + m2) - 8
    assert den != 0
    lam = Fraction(4 - 3 * m3, den)
    return lam if lam > 0 else None


def required_jmax(a, b) -> int:
    """Smallest truncation that sees every kernel triple for ``lam in [a, b]``.

    From the kernel equation, ``mu1 + mu2 <= 8/3 + 4/(3a)`` and
    ``mu3 <= 4/3 + 8b/3``.
    """
    a, b = as_fraction(a), as_fraction(b)
    bound = max(Fraction(8, 3) + Fraction(4, 3) / a, Fraction(4, 3) + Fraction(8, 3) * b)
    j = 0
    while (j + 1) * (j + 2) <= bound:
        j += 1
    return j


def bifurcation_instants(interval, j_max=DEFAULT_JMAX) -> list[dict]:
    """Kernel crossings with ``lam`` strictly inside ``interval``.

    An instant is flagged as a bifurcation instant when the kernel dimension
    is odd and every family's transversality multiplier is nonzero.
    """
    a, b = (as_fraction(x) for x in interval)
    if not 0 < a < b:
        raise ValueError("interval must satisfy 0 < a < b")
    found = {}
    for t in product(range(j_max + 1), repeat=3):
        lam = crossing_lambda(t)
        if lam is not None and a < lam < b:
            found.setdefault(lam, []).append(t)
    out = []
    for lam in sorted(found):
        fams = kernel_families(lam, j_max)
        dim = sum(f.dimension for f in fams)
        nonzero = all(f.multiplier != 0 for f in fams)
        out.append(dict(
            lam=lam,
            dimension=dim,
            odd=dim % 2 == 1,
            families=fams,
            transversal=nonzero,
            bifurcation=dim % 2 == 1 and nonzero,
        ))
    return out


def truncation_complete(interval, j_max) -> bool:
    a, b = (as_fraction(x) for x in interval)
    return j_max >= required_jmax(a, b)
