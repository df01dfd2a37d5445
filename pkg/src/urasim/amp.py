"""AMP recovery of the row-sparse codeword-activity matrix from the first l_p rows.

The iteration consumes the effective dictionary sqrt(Es)*A, so active rows
of the unknown matrix are the raw CN(0,1) channel rows (unit prior
variance) and the Bernoulli-Gaussian MMSE denoiser needs no per-scenario
tuning.  The matched-filter step divides by the squared column norm
Es*l_p of the effective dictionary, which keeps the effective observation
in channel units; the residual update carries the Onsager correction with
the averaged denoiser Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig

TAU_SQ_FLOOR = 1e-12
_DIVERGENCE_WINDOW = 5
_DIVERGENCE_FACTOR = 10.0


class AmpError(ValueError):
    pass


class AmpDivergenceError(AmpError):
    """Effective noise variance kept growing; the iteration was aborted."""

    def __init__(self, iteration: int, tau_history: list[float]):
        self.iteration = iteration
        self.tau_history = tau_history
        recent = ", ".join(f"{t:.3e}" for t in tau_history[-6:])
        super().__init__(
            f"AMP diverged at iteration {iteration}: tau^2 history [... {recent}]"
        )


@dataclass
class AmpState:
    """Iteration state of the sparse recovery."""

    x_hat: np.ndarray      # (2^b_p, m) complex row estimates, channel units
    residual: np.ndarray   # (l_p, m) complex
    tau_sq: float          # effective noise variance seen by the denoiser
    iteration: int
    mse_delta: float       # squared Frobenius norm of the last estimate change
    posteriors: np.ndarray  # (2^b_p,) activity probability per row


@dataclass(frozen=True)
class CsEstimate:
    """Output of the activity detector: indices, channel rows, posteriors."""

    detected: np.ndarray    # 1-based codeword indices, ascending
    h_hat: np.ndarray       # (k_detected, m) complex channel estimates
    posteriors: np.ndarray  # (k_detected,) activity probabilities

    @property
    def k_detected(self) -> int:
        return int(self.detected.size)


def _sigmoid(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _denoise_rows(rows: np.ndarray, tau_sq: float, lam: float,
                  gamma: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise Bernoulli-Gaussian MMSE denoiser, vectorised over all rows.

    Returns (denoised rows, activity posteriors, averaged Jacobian).
    """
    n, m = rows.shape
    energy = np.einsum("ij,ij->i", rows.real, rows.real) \
        + np.einsum("ij,ij->i", rows.imag, rows.imag)
    beta = 1.0 / tau_sq - 1.0 / (tau_sq + gamma)
    log_odds = (
        np.log(lam / (1.0 - lam))
        + m * np.log(tau_sq / (tau_sq + gamma))
        + energy * beta
    )
    post = _sigmoid(log_odds)
    shrink = gamma / (gamma + tau_sq)
    out = (post * shrink)[:, None] * rows
    # per-row Jacobian is shrink * (p*I + beta*p*(1-p) * r r^H); average them
    w = shrink * beta * post * (1.0 - post)
    jbar = shrink * post.mean() * np.eye(m, dtype=np.complex128)
    jbar += (rows * w[:, None]).T @ rows.conj() / n
    return out, post, jbar


def mmse_denoise(row: np.ndarray, tau_sq: float, lam: float,
                 gamma: float = 1.0) -> tuple[np.ndarray, float, np.ndarray]:
    """Denoise a single length-m row; also return its posterior and Jacobian.

    The Jacobian is the m x m Wirtinger derivative of the output with
    respect to the input row (the conjugate coordinate held fixed).
    """
    r = np.asarray(row, dtype=np.complex128)
    if r.ndim != 1:
        raise AmpError("mmse_denoise expects a 1-D row")
    if not np.isfinite(r).all() or not np.isfinite(tau_sq):
        raise AmpError("non-finite input to mmse_denoise")
    if tau_sq <= 0:
        raise AmpError(f"tau_sq must be positive, got {tau_sq}")
    if not 0.0 < lam < 1.0:
        raise AmpError(f"lambda must be in (0,1), got {lam}")
    m = r.size
    energy = float(np.vdot(r, r).real)
    beta = 1.0 / tau_sq - 1.0 / (tau_sq + gamma)
    log_odds = (
        np.log(lam / (1.0 - lam))
        + m * np.log(tau_sq / (tau_sq + gamma))
        + energy * beta
    )
    post = float(_sigmoid(np.asarray([log_odds]))[0])
    shrink = gamma / (gamma + tau_sq)
    out = post * shrink * r
    jac = shrink * (
        post * np.eye(m, dtype=np.complex128)
        + beta * post * (1.0 - post) * np.outer(r, r.conj())
    )
    return out, post, jac


def amp_iterate(codebook_eff: np.ndarray, yp: np.ndarray, cfg: SimConfig,
                trace: list | None = None) -> tuple[AmpState, list[float]]:
    """Run the AMP iteration until the estimate stops moving.

    codebook_eff is the transmit-scaled dictionary sqrt(Es)*A; yp holds the
    first l_p rows of the received signal.  Stops when the relative MSE of
    the estimate update drops below cfg.amp_tol or cfg.amp_max_iter is
    reached.  Raises AmpDivergenceError if the effective noise variance
    grows more than tenfold across five consecutive iterations.
    """
    d = np.asarray(codebook_eff, dtype=np.complex128)
    y = np.asarray(yp, dtype=np.complex128)
    lp, n = d.shape
    if y.shape[0] != lp:
        raise AmpError(f"yp has {y.shape[0]} rows, dictionary has {lp}")
    m = y.shape[1]
    # exact for power-constrained codebooks (all columns share one norm)
    col_sq = float(np.einsum("ij,ij->", d.real, d.real)
                   + np.einsum("ij,ij->", d.imag, d.imag)) / n
    if col_sq <= 0:
        raise AmpError("effective dictionary has zero energy")

    lam = cfg.sparsity_prior
    x = np.zeros((n, m), dtype=np.complex128)
    z = y.copy()
    post = np.zeros(n)
    tau_hist: list[float] = []
    mse_history: list[float] = []
    tau_sq = TAU_SQ_FLOOR
    mse = 0.0
    it = 0

    for it in range(1, cfg.amp_max_iter + 1):
        zz = float(np.einsum("ij,ij->", z.real, z.real)
                   + np.einsum("ij,ij->", z.imag, z.imag))
        tau_sq = max(zz / (lp * m * col_sq), TAU_SQ_FLOOR)
        tau_hist.append(tau_sq)
        if (
            len(tau_hist) > _DIVERGENCE_WINDOW
            and tau_hist[-1] > _DIVERGENCE_FACTOR * tau_hist[-1 - _DIVERGENCE_WINDOW]
        ):
            raise AmpDivergenceError(it, tau_hist)

        r = x + (d.conj().T @ z) / col_sq
        x_new, post, jbar = _denoise_rows(r, tau_sq, lam)
        z = y - d @ x_new + (n / lp) * (z @ jbar.conj().T)

        diff = x_new - x
        mse = float(np.einsum("ij,ij->", diff.real, diff.real)
                    + np.einsum("ij,ij->", diff.imag, diff.imag))
        ref = float(np.einsum("ij,ij->", x_new.real, x_new.real)
                    + np.einsum("ij,ij->", x_new.imag, x_new.imag))
        mse_history.append(mse)
        x = x_new
        if trace is not None:
            trace.append({
                "iteration": it,
                "tau_sq": tau_sq,
                "mse_delta": mse,
                "detected_count": int((post >= cfg.activity_threshold).sum()),
            })
        if mse <= cfg.amp_tol * max(ref, TAU_SQ_FLOOR):
            break

    state = AmpState(x_hat=x, residual=z, tau_sq=tau_sq, iteration=it,
                     mse_delta=mse, posteriors=post)
    return state, mse_history


def detect_active(state: AmpState, cfg: SimConfig) -> CsEstimate:
    """Threshold the activity posteriors into the detected-codeword list."""
    hits = np.flatnonzero(state.posteriors >= cfg.activity_threshold)
    detected = (hits + 1).astype(np.int64)  # external indices are 1-based
    return CsEstimate(
        detected=detected,
        h_hat=state.x_hat[hits].copy(),
        posteriors=state.posteriors[hits].copy(),
    )
