"""Seeded generators for synthetic low-rank data and observation masks.

All generators are pure functions of ``(spec, seed)``.  Uniform variates come
from a PCG64 stream as ``(k + 0.5) / 2**53`` with ``k`` drawn from
``[0, 2**53)``, so they lie strictly inside (0, 1); Gaussians are produced by
applying the inverse normal CDF to that stream.  This transform is fixed once
and documented here so that replays are bit-identical within this
implementation.
"""

from __future__ import annotations

import gzip
import importlib.resources
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import ndtri

__all__ = [
    "Homogeneous",
    "RowColProduct",
    "CheckerColumns",
    "CheckerRows",
    "TwoPattern",
    "ExplicitProbs",
    "MissingnessSpec",
    "BlockSign",
    "GaussianEigvecs",
    "ExplicitFrame",
    "DataModelSpec",
    "rng_split",
    "generate_mask",
    "generate_data",
    "build_frame",
    "missingness_from_dict",
    "missingness_to_dict",
    "data_model_from_dict",
    "data_model_to_dict",
]

# Internal seed fixing the Gaussian-eigenvector frame; chosen so that the
# canonical 500 x 10 frame has incoherence sqrt(d)*max|V| below 3.63.  A copy
# of that frame is stored under data/ and regeneration is tested against it.
GAUSS_FRAME_SEED = 5

_TWO53 = float(2**53)


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


def rng_split(seed: int, *stream: int) -> np.random.Generator:
    """Independent deterministic generator for ``(seed, *stream)``.

    Distinct stream ids yield statistically independent streams; replaying
    the same ids reproduces the bit stream exactly.
    """
    for part in (seed, *stream):
        if int(part) < 0:
            raise ValueError(f"seed/stream ids must be nonnegative, got {part}")
    ss = np.random.SeedSequence((int(seed), *(int(s) for s in stream)))
    return np.random.Generator(np.random.PCG64(ss))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_split(int(seed))


def open_uniforms(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform draws strictly inside (0, 1): ``(k + 0.5) / 2**53``."""
    k = rng.integers(0, 2**53, size=shape, dtype=np.int64)
    return (k + 0.5) / _TWO53


def standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Gaussian draws via the inverse CDF applied to :func:`open_uniforms`."""
    return ndtri(open_uniforms(rng, shape))


# ---------------------------------------------------------------------------
# Missingness mechanisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Homogeneous:
    """Every entry revealed independently with the same probability."""

    p: float


@dataclass(frozen=True)
class RowColProduct:
    """Reveal entry (i, j) with probability P_i * Q_j.

    Row intensities P_i are drawn uniformly from ``row_range`` and column
    intensities Q_j from ``col_range``, fresh for every generated mask.
    """

    row_range: tuple = (0.0, 0.2)
    col_range: tuple = (0.05, 0.95)


@dataclass(frozen=True)
class CheckerColumns:
    """Column-parity rates: ``p_first`` on columns 1, 3, ... (1-based), ``p_second`` on the rest."""

    p_first: float
    p_second: float


@dataclass(frozen=True)
class CheckerRows:
    """Row-parity rates: ``p_first`` on rows 1, 3, ... (1-based), ``p_second`` on the rest."""

    p_first: float
    p_second: float


@dataclass(frozen=True)
class TwoPattern:
    """Each row reveals exactly one of the first two columns (fair coin) and
    every remaining column."""


@dataclass(frozen=True)
class ExplicitProbs:
    """Entrywise revelation probabilities given as an n x d matrix."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))


MissingnessSpec = Union[
    Homogeneous, RowColProduct, CheckerColumns, CheckerRows, TwoPattern, ExplicitProbs
]


def _check_prob(p: float, what: str) -> None:
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{what} must lie in [0, 1], got {p}")


def generate_mask(spec: MissingnessSpec, n: int, d: int, seed) -> np.ndarray:
    """Draw an n x d boolean revelation mask from the mechanism ``spec``."""
    if n < 1 or d < 1:
        raise ValueError(f"mask shape must be positive, got {n} x {d}")
    rng = _as_rng(seed)

    if isinstance(spec, Homogeneous):
        _check_prob(spec.p, "p")
        return open_uniforms(rng, (n, d)) < spec.p

    if isinstance(spec, RowColProduct):
        for lo, hi in (spec.row_range, spec.col_range):
            _check_prob(lo, "range low")
            _check_prob(hi, "range high")
            if lo > hi:
                raise ValueError(f"empty range ({lo}, {hi})")
        # Draw order is fixed: row intensities, column intensities, entries.
        p_rows = spec.row_range[0] + (
            spec.row_range[1] - spec.row_range[0]
        ) * open_uniforms(rng, n)
        q_cols = spec.col_range[0] + (
            spec.col_range[1] - spec.col_range[0]
        ) * open_uniforms(rng, d)
        return open_uniforms(rng, (n, d)) < np.outer(p_rows, q_cols)

    if isinstance(spec, CheckerColumns):
        _check_prob(spec.p_first, "p_first")
        _check_prob(spec.p_second, "p_second")
        p = np.where(np.arange(d) % 2 == 0, spec.p_first, spec.p_second)
        return open_uniforms(rng, (n, d)) < p[None, :]

    if isinstance(spec, CheckerRows):
        _check_prob(spec.p_first, "p_first")
        _check_prob(spec.p_second, "p_second")
        p = np.where(np.arange(n) % 2 == 0, spec.p_first, spec.p_second)
        return open_uniforms(rng, (n, d)) < p[:, None]

    if isinstance(spec, TwoPattern):
        if d < 2:
            raise ValueError("two-pattern mechanism needs d >= 2")
        mask = np.ones((n, d), dtype=bool)
        first = open_uniforms(rng, n) < 0.5
        mask[:, 0] = first
        mask[:, 1] = ~first
        return mask

    if isinstance(spec, ExplicitProbs):
        probs = spec.probs
        if probs.shape != (n, d):
            raise ValueError(
                f"probability matrix shape {probs.shape} does not match ({n}, {d})"
            )
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        return open_uniforms(rng, (n, d)) < probs

    raise TypeError(f"unknown missingness spec {spec!r}")


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockSign:
    """Two maximally incoherent sign columns: all-plus and half-plus/half-minus.

    Requires even d and exactly two components; each entry is +-1/sqrt(d).
    """


@dataclass(frozen=True)
class GaussianEigvecs:
    """Top eigenvectors of one fixed standard-Gaussian sample covariance.

    The realisation is regenerated from an internal seed of this package, so
    the frame is identical across runs and experiments.
    """


@dataclass(frozen=True)
class ExplicitFrame:
    columns: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "columns", np.asarray(self.columns, dtype=float))


FrameSource = Union[BlockSign, GaussianEigvecs, ExplicitFrame]


@dataclass(frozen=True)
class DataModelSpec:
    """Low-rank-plus-noise model: n x d data with K-dimensional signal.

    ``sigma_u`` holds the K diagonal variances of the score covariance; rows
    of the score matrix are independent centered Gaussians with that
    covariance.  With ``noise`` set, independent standard Gaussian noise is
    added entrywise.
    """

    n: int
    d: int
    k: int
    sigma_u: tuple
    noise: bool = True
    frame: FrameSource = BlockSign()

    def __post_init__(self):
        object.__setattr__(self, "sigma_u", tuple(float(v) for v in self.sigma_u))
        if self.n < 1 or self.d < 1:
            raise ValueError(f"data shape must be positive, got {self.n} x {self.d}")
        if not 1 <= self.k <= self.d:
            raise ValueError(f"k={self.k} outside [1, {self.d}]")
        if len(self.sigma_u) != self.k:
            raise ValueError(
                f"sigma_u must list {self.k} variances, got {len(self.sigma_u)}"
            )
        if any(v < 0 for v in self.sigma_u):
            raise ValueError("sigma_u variances must be nonnegative")


def _block_sign_frame(d: int, k: int) -> np.ndarray:
    if k != 2:
        raise ValueError("block-sign frame requires exactly 2 components")
    if d % 2 != 0:
        raise ValueError(f"block-sign frame requires even d, got {d}")
    half = d // 2
    col0 = np.ones(d)
    col1 = np.concatenate([np.ones(half), -np.ones(half)])
    return np.column_stack([col0, col1]) / np.sqrt(d)


def _gaussian_eigvec_frame(n: int, d: int, k: int) -> np.ndarray:
    # One fixed realisation: sample covariance of n standard Gaussian rows.
    rng = rng_split(GAUSS_FRAME_SEED)
    a = standard_normals(rng, (n, d))
    vals, vecs = np.linalg.eigh(a.T @ a / n)
    return vecs[:, ::-1][:, :k].copy()


def build_frame(spec: DataModelSpec) -> np.ndarray:
    """The d x K orthonormal component frame a data model generates around."""
    if isinstance(spec.frame, BlockSign):
        return _block_sign_frame(spec.d, spec.k)
    if isinstance(spec.frame, GaussianEigvecs):
        return _gaussian_eigvec_frame(spec.n, spec.d, spec.k)
    if isinstance(spec.frame, ExplicitFrame):
        v = spec.frame.columns
        if v.shape != (spec.d, spec.k):
            raise ValueError(
                f"explicit frame shape {v.shape} does not match ({spec.d}, {spec.k})"
            )
        return v.copy()
    raise TypeError(f"unknown frame source {spec.frame!r}")


def generate_data(spec: DataModelSpec, seed):
    """Draw one dataset from the model.

    Returns
    -------
    (y, v, u)
        ``y`` is the n x d data matrix, ``v`` the d x K component frame the
        scores load on, ``u`` the n x K score matrix.  Scores are drawn
        first, then (if enabled) the noise matrix.
    """
    rng = _as_rng(seed)
    v = build_frame(spec)
    u = standard_normals(rng, (spec.n, spec.k)) * np.sqrt(np.array(spec.sigma_u))
    y = u @ v.T
    if spec.noise:
        y = y + standard_normals(rng, (spec.n, spec.d))
    return y, v, u


def load_reference_frame() -> np.ndarray:
    """The 500 x 10 Gaussian-eigenvector frame shipped with the package."""
    ref = importlib.resources.files("primepca").joinpath(
        "data/gaussian_frame_500x10.csv.gz"
    )
    with ref.open("rb") as fh:
        with gzip.open(fh, mode="rt") as gz:
            return np.loadtxt(gz, delimiter=",")


# ---------------------------------------------------------------------------
# JSON-friendly (de)serialization used by the experiment harness
# ---------------------------------------------------------------------------

_MISSINGNESS_KINDS = {
    "homogeneous": Homogeneous,
    "row_col_product": RowColProduct,
    "checker_columns": CheckerColumns,
    "checker_rows": CheckerRows,
    "two_pattern": TwoPattern,
    "explicit_probs": ExplicitProbs,
}


def missingness_to_dict(spec: MissingnessSpec) -> dict:
    if isinstance(spec, Homogeneous):
        return {"kind": "homogeneous", "p": spec.p}
    if isinstance(spec, RowColProduct):
        return {
            "kind": "row_col_product",
            "row_range": list(spec.row_range),
            "col_range": list(spec.col_range),
        }
    if isinstance(spec, CheckerColumns):
        return {
            "kind": "checker_columns",
            "p_first": spec.p_first,
            "p_second": spec.p_second,
        }
    if isinstance(spec, CheckerRows):
        return {
            "kind": "checker_rows",
            "p_first": spec.p_first,
            "p_second": spec.p_second,
        }
    if isinstance(spec, TwoPattern):
        return {"kind": "two_pattern"}
    if isinstance(spec, ExplicitProbs):
        return {"kind": "explicit_probs", "probs": spec.probs.tolist()}
    raise TypeError(f"unknown missingness spec {spec!r}")


def missingness_from_dict(obj: dict) -> MissingnessSpec:
    kind = obj.get("kind")
    if kind not in _MISSINGNESS_KINDS:
        raise ValueError(
            f"unknown missingness kind {kind!r}; expected one of "
            f"{sorted(_MISSINGNESS_KINDS)}"
        )
    if kind == "homogeneous":
        return Homogeneous(p=float(obj["p"]))
    if kind == "row_col_product":
        return RowColProduct(
            row_range=tuple(obj.get("row_range", (0.0, 0.2))),
            col_range=tuple(obj.get("col_range", (0.05, 0.95))),
        )
    if kind in ("checker_columns", "checker_rows"):
        cls = _MISSINGNESS_KINDS[kind]
        return cls(p_first=float(obj["p_first"]), p_second=float(obj["p_second"]))
    if kind == "two_pattern":
        return TwoPattern()
    return ExplicitProbs(probs=np.asarray(obj["probs"], dtype=float))


def data_model_to_dict(spec: DataModelSpec) -> dict:
    if isinstance(spec.frame, BlockSign):
        frame = {"kind": "block_sign"}
    elif isinstance(spec.frame, GaussianEigvecs):
        frame = {"kind": "gaussian_eigvecs"}
    elif isinstance(spec.frame, ExplicitFrame):
        frame = {"kind": "explicit", "columns": spec.frame.columns.tolist()}
    else:
        raise TypeError(f"unknown frame source {spec.frame!r}")
    return {
        "n": spec.n,
        "d": spec.d,
        "k": spec.k,
        "sigma_u": list(spec.sigma_u),
        "noise": spec.noise,
        "frame": frame,
    }


def data_model_from_dict(obj: dict) -> DataModelSpec:
    frame_obj = obj.get("frame", {"kind": "block_sign"})
    kind = frame_obj.get("kind")
    if kind == "block_sign":
        frame: FrameSource = BlockSign()
    elif kind == "gaussian_eigvecs":
        frame = GaussianEigvecs()
    elif kind == "explicit":
        frame = ExplicitFrame(columns=np.asarray(frame_obj["columns"], dtype=float))
    else:
        raise ValueError(f"unknown frame kind {kind!r}")
    return DataModelSpec(
        n=int(obj["n"]),
        d=int(obj["d"]),
        k=int(obj["k"]),
        sigma_u=tuple(obj["sigma_u"]),
        noise=bool(obj.get("noise", True)),
        frame=frame,
    )
