"""Wild and parametric bootstrap of the studentized contrast statistics.

Both schemes resample the response only; the design, its Gram inverse, the
hat-matrix leverages and the leverage weights are fixed.  Every replicate b
draws from its own counter-based substream (seed, b, attempt), so results
are independent of execution order and chunk size, bit for bit.  Replicates
whose studentizer degenerates (zero bootstrap variance for some contrast)
are redrawn from the next attempt substream and counted.

All reductions in the refit path use np.einsum with the default
(non-optimized) contraction, whose per-replicate summation order does not
depend on the batch size; this keeps single-replicate recomputation
bitwise identical to batched execution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrasts import ContrastMatrix
from .covariance import CovarianceEstimate, groupwise_cov, hc4_weights, psd_sqrt
from .design import DesignMatrices, FitResult
from .exceptions import EstimationError
from ._rng import substream

CHUNK = 256
MAX_ATTEMPTS = 64
INVALID_WARN_FRACTION = 0.001
INVALID_ABORT_FRACTION = 0.01

KINDS = ("wild", "parametric")


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, scheme and seed for one bootstrap run.

    ``workers`` is an advisory hint; the implementation is free to ignore it
    and results never depend on it.
    """

    kind: str
    B: int
    seed: int
    workers: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EstimationError(f"unknown bootstrap kind '{self.kind}'")
        if self.B < 1:
            raise EstimationError("bootstrap replicate count B must be >= 1")


@dataclass(frozen=True)
class BootstrapDraws:
    """B x r matrix of bootstrap statistics, one row per replicate."""

    A_star: np.ndarray
    kind: str
    seed: int
    invalid_redraws: int = 0
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        self.A_star.setflags(write=False)
        if not np.all(np.isfinite(self.A_star)):
            raise EstimationError("bootstrap statistics contain non-finite values")

    @property
    def B(self) -> int:
        return self.A_star.shape[0]

    @property
    def r(self) -> int:
        return self.A_star.shape[1]


class _Engine:
    """Precomputed refit state shared by all replicates of one bootstrap."""

    def __init__(self, dm: DesignMatrices, H: np.ndarray,
                 residuals: np.ndarray | None, sigmas=None):
        self.n, self.k, self.d = dm.n, dm.k, dm.d
        self.X = dm.X
        self.GXt = dm.gram_inv @ dm.X.T
        weights = hc4_weights(dm.leverages, dm.n)
        U1 = (dm.X @ dm.gram_inv)[:, : dm.k]
        self.wU1sq = weights[:, None] * U1**2
        self.H = H
        self.H_sq = H**2
        self.residuals = residuals
        self.wild_scale = None
        if residuals is not None:
            self.wild_scale = 1.0 / np.sqrt(1.0 - dm.leverages)
        self.group_slices = dm.group_slices()
        self.roots = None
        if sigmas is not None:
            self.roots = [psd_sqrt(S) for S in sigmas]

    def draw_wild(self, rngs) -> np.ndarray:
        """Stack wild-multiplier responses for one replicate chunk."""
        m = len(rngs)
        Y = np.empty((m, self.n, self.d))
        for j, rng in enumerate(rngs):
            t = rng.integers(0, 2, size=self.n) * 2.0 - 1.0
            Y[j] = (t * self.wild_scale)[:, None] * self.residuals
        return Y

    def draw_parametric(self, rngs) -> np.ndarray:
        """Stack group-wise zero-mean normal responses for one chunk."""
        m = len(rngs)
        Y = np.empty((m, self.n, self.d))
        for j, rng in enumerate(rngs):
            u = rng.standard_normal((self.n, self.d))
            for sl, L in zip(self.group_slices, self.roots):
                Y[j, sl] = u[sl] @ L
        return Y

    def statistics(self, Ystar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Refit a chunk of responses; return (statistics, validity) per row."""
        n, k, d = self.n, self.k, self.d
        m = Ystar.shape[0]
        beta = np.einsum("pn,mnd->mpd", self.GXt, Ystar)
        mu_flat = np.ascontiguousarray(beta[:, :k, :]).reshape(m, k * d)
        resid = Ystar - np.einsum("np,mpd->mnd", self.X, beta)
        D_flat = n * np.einsum("na,mnl->mal", self.wU1sq, resid**2).reshape(m, k * d)
        denom = np.einsum("mc,rc->mr", D_flat, self.H_sq)
        numer = np.einsum("mc,rc->mr", mu_flat, self.H)
        with np.errstate(divide="ignore", invalid="ignore"):
            A = np.sqrt(n) * numer / np.sqrt(denom)
        valid = (denom > 0.0).all(axis=1) & np.isfinite(A).all(axis=1)
        return A, valid


def _wild_engine(dm: DesignMatrices, fit: FitResult, H: np.ndarray) -> _Engine:
    return _Engine(dm, H, residuals=fit.residuals)


def _parametric_engine(dm: DesignMatrices, cov: CovarianceEstimate,
                       H: np.ndarray) -> _Engine:
    sigmas = cov.group_sigmas
    if sigmas is None:
        # Recompute to raise the precise nonpositive-divisor error.
        sigmas = groupwise_cov(
            FitResult(
                mu_hat=np.zeros((dm.k, dm.d)),
                nu_hat=np.zeros((dm.c, dm.d)),
                residuals=np.zeros((dm.n, dm.d)),
                leverages=dm.leverages.copy(),
            ),
            dm.n_i,
            dm.c,
        )
    return _Engine(dm, H, residuals=None, sigmas=sigmas)


def wild_replicate(dm: DesignMatrices, fit: FitResult, contrasts: ContrastMatrix,
                   rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """One wild-bootstrap replicate: sign-flipped leverage-scaled residuals.

    Each subject's residual vector is multiplied by one random sign shared
    across all outcome components, rescaled by 1/sqrt(1-p); the model is
    refit and the studentized contrast statistics recomputed.

    Returns the r-vector of statistics and a validity flag (False when some
    contrast's bootstrap variance is not positive).
    """
    engine = _wild_engine(dm, fit, contrasts.H)
    A, valid = engine.statistics(engine.draw_wild([rng]))
    return A[0], bool(valid[0])


def parametric_replicate(dm: DesignMatrices, cov: CovarianceEstimate,
                         contrasts: ContrastMatrix,
                         rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """One parametric replicate: group-wise zero-mean normal responses.

    Responses are drawn from N(0, Sigma_i) per group via a symmetric PSD
    square root of the group covariance (singular covariances allowed);
    the rest of the pipeline matches :func:`wild_replicate`.
    """
    engine = _parametric_engine(dm, cov, contrasts.H)
    A, valid = engine.statistics(engine.draw_parametric([rng]))
    return A[0], bool(valid[0])


def run_bootstrap(cfg: BootstrapConfig, dm: DesignMatrices, fit: FitResult,
                  cov: CovarianceEstimate, contrasts: ContrastMatrix) -> BootstrapDraws:
    """Draw B bootstrap replicates of the studentized contrast statistics.

    All r statistics of one row come from the same resampled response.
    Invalid replicates (degenerate studentizer) are redrawn from the next
    attempt substream; a redraw share above 0.1% of B is reported as a
    warning and above 1% the bootstrap distribution is declared degenerate.

    Returns
    -------
    BootstrapDraws
        B x r statistics, deterministic given (kind, B, seed).
    """
    if contrasts.H.shape[1] != dm.k * dm.d:
        raise EstimationError(
            f"contrast matrix has {contrasts.H.shape[1]} columns, "
            f"expected k*d = {dm.k * dm.d}"
        )
    if cfg.kind == "wild":
        engine = _wild_engine(dm, fit, contrasts.H)
        draw = engine.draw_wild
    else:
        engine = _parametric_engine(dm, cov, contrasts.H)
        draw = engine.draw_parametric

    B = cfg.B
    r = contrasts.H.shape[0]
    A_star = np.empty((B, r))
    abort_count = INVALID_ABORT_FRACTION * B
    invalid_total = 0
    pending = [(b, 0) for b in range(B)]
    while pending:
        batch, pending = pending[:CHUNK], pending[CHUNK:]
        rngs = [substream(cfg.seed, b, attempt) for b, attempt in batch]
        A, valid = engine.statistics(draw(rngs))
        for j, (b, attempt) in enumerate(batch):
            if valid[j]:
                A_star[b] = A[j]
            else:
                invalid_total += 1
                if attempt + 1 >= MAX_ATTEMPTS:
                    raise EstimationError(
                        f"degenerate bootstrap distribution: replicate {b} "
                        f"invalid after {MAX_ATTEMPTS} attempts"
                    )
                pending.append((b, attempt + 1))
        if invalid_total > abort_count:
            raise EstimationError(
                "degenerate bootstrap distribution: more than "
                f"{INVALID_ABORT_FRACTION:.0%} of replicates invalid "
                f"({invalid_total} redraws for B={B})"
            )

    warnings = ()
    if invalid_total > INVALID_WARN_FRACTION * B:
        warnings = (
            f"{invalid_total} invalid bootstrap replicates redrawn "
            f"(more than {INVALID_WARN_FRACTION:.1%} of B={B})",
        )
    return BootstrapDraws(
        A_star=A_star,
        kind=cfg.kind,
        seed=cfg.seed,
        invalid_redraws=invalid_total,
        warnings=warnings,
    )


def save_draws_csv(draws: BootstrapDraws, path, labels=None) -> None:
    """Dump the replicate matrix to CSV for audit (one row per replicate)."""
    header = ",".join(labels) if labels else ",".join(
        f"contrast_{s + 1}" for s in range(draws.r)
    )
    np.savetxt(path, draws.A_star, delimiter=",", header=header, comments="")
