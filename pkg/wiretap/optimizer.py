"""Secrecy-capacity optimizer for amplitudes above the low-amplitude threshold.

Alternates projected gradient ascent on the shell radii with a
Blahut-Arimoto style tilting of the shell probabilities, certifies the
result with the epsilon-KKT conditions on [0, R], and adds a mass point at
the density's maximizer whenever the certificate fails.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize as sp_optimize

from .config import get_optimizer_config, get_quadrature_config, map_ordered
from .density import SecrecyDensity
from .models import (
    AscentStep,
    ChannelParams,
    KktReport,
    OptimizeResult,
    OptimizerConfig,
    QuadratureConfig,
    ShellPmf,
    TracePoint,
)
from .validation import NonConvergence, TooManyPoints, validate_pmf

logger = logging.getLogger("wiretap.optimizer")

# Shells lighter than this are dropped after a probability update
PRUNE_THRESHOLD = 1e-12

# Gradients below this are treated as a critical point
ZERO_GRADIENT = 1e-12

# Radii within DEDUP_RATIO * R of an existing shell are not added again
DEDUP_RATIO = 1e-6


# =============================================================================
# Objective
# =============================================================================

def _density(pmf: ShellPmf, params: ChannelParams, cfg: Optional[QuadratureConfig]) -> SecrecyDensity:
    return SecrecyDensity(pmf, params, cfg or get_quadrature_config())


def _xi_at_shells(density: SecrecyDensity) -> np.ndarray:
    return np.array([density.xi(r) for r in density.pmf.radii])


def secrecy_information(pmf: ShellPmf, params: ChannelParams, cfg: Optional[QuadratureConfig] = None) -> float:
    """I(X;Y1) - I(X;Y2) in nats for the shell pmf, as sum_k p_k Xi(rho_k)."""
    density = _density(pmf, params, cfg)
    if density.trivial:
        return 0.0
    return math.fsum(p * v for p, v in zip(pmf.probs, _xi_at_shells(density)))


# =============================================================================
# Radii and Probability Updates
# =============================================================================

def gradient_ascent_step(
    pmf: ShellPmf,
    params: ChannelParams,
    opt_cfg: Optional[OptimizerConfig] = None,
    cfg: Optional[QuadratureConfig] = None,
) -> AscentStep:
    """One projected gradient step on the radii with Armijo backtracking.

    Component k of the gradient is p_k Xi'(rho_k). Radii are projected onto
    [0, R]; the outermost shell stays at R. A step is accepted once
    I(new) >= I(old) + alpha * grad . (rho_new - rho); otherwise it shrinks
    by beta. If the step underflows the input pmf comes back flagged stalled.
    """
    opt_cfg = opt_cfg or get_optimizer_config()
    density = _density(pmf, params, cfg)
    radius = params.radius
    probs = np.asarray(pmf.probs)
    radii = np.asarray(pmf.radii)
    before = secrecy_information(pmf, params, density.cfg)

    grad = probs * np.array([density.xi_prime(r) for r in radii])
    grad[radii >= radius * (1.0 - 1e-12)] = 0.0
    top = float(np.max(np.abs(grad))) if grad.size else 0.0
    if top < ZERO_GRADIENT:
        return AscentStep(pmf=pmf, objective_before=before, objective_after=before, step_size=0.0)

    step = radius / top
    while step * top > 1e-14 * max(radius, 1.0):
        moved = np.clip(radii + step * grad, 0.0, radius)
        moved[-1] = radii[-1]
        gain = float(grad @ (moved - radii))
        candidate = ShellPmf.from_points(moved, probs, radius=radius)
        after = secrecy_information(candidate, params, density.cfg)
        if after >= before + opt_cfg.backtrack_alpha * gain:
            logger.debug(f"[Optimizer] GA step {step:.3e}: {before:.9f} -> {after:.9f}")
            return AscentStep(pmf=candidate, objective_before=before, objective_after=after, step_size=step)
        step *= opt_cfg.backtrack_beta

    logger.debug("[Optimizer] GA line search stalled")
    return AscentStep(pmf=pmf, objective_before=before, objective_after=before, step_size=0.0, stalled=True)


def blahut_arimoto_step(
    pmf: ShellPmf,
    params: ChannelParams,
    opt_cfg: Optional[OptimizerConfig] = None,
    cfg: Optional[QuadratureConfig] = None,
) -> ShellPmf:
    """Tilt p_k by exp(Xi(rho_k; P)) until max |dp| < ba_tol or ba_max_iters.

    Shells lighter than PRUNE_THRESHOLD are dropped afterwards, except the
    shell at R.
    """
    opt_cfg = opt_cfg or get_optimizer_config()
    if pmf.size == 1:
        return pmf
    cfg = cfg or get_quadrature_config()
    radii = np.asarray(pmf.radii)
    probs = np.asarray(pmf.probs)

    for iteration in range(1, opt_cfg.ba_max_iters + 1):
        current = ShellPmf(radii=tuple(radii), probs=tuple(probs / probs.sum()))
        values = _xi_at_shells(_density(current, params, cfg))
        logits = np.log(np.maximum(probs, 1e-300)) + values
        updated = np.exp(logits - logits.max())
        updated /= updated.sum()
        delta = float(np.max(np.abs(updated - probs)))
        probs = updated
        if delta < opt_cfg.ba_tol:
            break
    logger.debug(f"[Optimizer] BA stopped after {iteration} iterations")

    keep = probs >= PRUNE_THRESHOLD
    keep[-1] = True
    return ShellPmf.from_points(radii[keep], probs[keep], radius=params.radius)


# =============================================================================
# KKT Certificate
# =============================================================================

def kkt_validate(
    pmf: ShellPmf,
    params: ChannelParams,
    epsilon: Optional[float] = None,
    kkt_grid: Optional[int] = None,
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
    opt_cfg: Optional[OptimizerConfig] = None,
) -> KktReport:
    """epsilon-KKT check: Xi equal to Xi(R) on the support, below it on [0, R].

    Support points are checked exactly; the interior on a uniform grid whose
    argmax is polished by a golden-section search between its neighbours.
    Unset ``epsilon`` and ``kkt_grid`` come from ``opt_cfg``.
    """
    opt_cfg = opt_cfg or get_optimizer_config()
    epsilon = opt_cfg.epsilon if epsilon is None else epsilon
    kkt_grid = opt_cfg.kkt_grid if kkt_grid is None else kkt_grid
    density = _density(pmf, params, cfg)
    radius = params.radius
    if density.trivial or radius == 0.0:
        return KktReport(valid=True, worst_support_violation=0.0, worst_interior_violation=0.0,
                         argmax_t=radius, xi_at_radius=0.0, epsilon=epsilon)

    xi_r = float(density.xi(radius))
    support = float(max(abs(density.xi(r) - xi_r) for r in pmf.radii))

    ts = np.linspace(0.0, radius, max(kkt_grid, 2))
    values = np.array(map_ordered(density.xi, ts.tolist(), threads))
    best = int(np.argmax(values))
    argmax_t, best_value = float(ts[best]), float(values[best])
    if 0 < best < ts.size - 1:
        try:
            polished = sp_optimize.minimize_scalar(
                lambda t: -density.xi(float(np.clip(t, 0.0, radius))),
                bracket=(ts[best - 1], ts[best], ts[best + 1]),
                method="golden",
                tol=1e-8,
            )
        except ValueError:
            # flat top: the bracket does not strictly enclose a maximum
            polished = None
        if polished is not None and polished.success and -polished.fun > best_value:
            argmax_t, best_value = float(np.clip(polished.x, 0.0, radius)), float(-polished.fun)

    interior = best_value - xi_r
    valid = bool(support <= epsilon and interior <= epsilon)
    logger.info(
        f"[KKT] K={pmf.size} support={support:.3e} interior={interior:.3e} "
        f"argmax_t={argmax_t:.6f} valid={valid}"
    )
    return KktReport(
        valid=valid,
        worst_support_violation=support,
        worst_interior_violation=interior,
        argmax_t=argmax_t,
        xi_at_radius=xi_r,
        epsilon=epsilon,
    )


def add_point(pmf: ShellPmf, kkt: KktReport, max_points: Optional[int] = None) -> ShellPmf:
    """Insert a shell at kkt.argmax_t and reset the probabilities to uniform."""
    max_points = get_optimizer_config().max_points if max_points is None else max_points
    radius = pmf.max_radius
    radii = list(pmf.radii)
    if not any(abs(r - kkt.argmax_t) <= DEDUP_RATIO * max(radius, 1e-300) for r in radii):
        if len(radii) + 1 > max_points:
            raise TooManyPoints(f"adding a shell at {kkt.argmax_t:.6g} would exceed {max_points} points", partial=pmf)
        radii.append(kkt.argmax_t)
        radii.sort()
    size = len(radii)
    return ShellPmf(radii=tuple(radii), probs=tuple([1.0 / size] * size))


# =============================================================================
# Main Loop
# =============================================================================

def _ensure_outer_shell(pmf: ShellPmf, params: ChannelParams) -> ShellPmf:
    validate_pmf(pmf, params)
    if pmf.max_radius >= params.radius * (1.0 - 1e-12):
        return pmf
    radii = list(pmf.radii) + [params.radius]
    return ShellPmf(radii=tuple(radii), probs=tuple([1.0 / len(radii)] * len(radii)))


def _same_pmf(a: ShellPmf, b: ShellPmf, tol: float) -> bool:
    if a.size != b.size:
        return False
    return bool(np.max(np.abs(np.subtract(a.radii, b.radii))) <= tol
                and np.max(np.abs(np.subtract(a.probs, b.probs))) <= tol)


def _ascend(pmf: ShellPmf, params: ChannelParams, opt_cfg: OptimizerConfig, cfg: QuadratureConfig,
            objectives: list[float], trace: list[TracePoint], escalation: int, round_: int) -> ShellPmf:
    for _ in range(opt_cfg.ga_max_iters):
        step = gradient_ascent_step(pmf, params, opt_cfg, cfg)
        objectives.append(step.objective_after)
        if step.step_size > 0:
            trace.append(TracePoint(escalation=escalation, round=round_, phase="ascent",
                                    objective=step.objective_after, pmf=step.pmf))
        pmf = step.pmf
        if step.stalled or step.objective_after - step.objective_before < opt_cfg.ga_tol:
            break
    return pmf


def optimize(
    params: ChannelParams,
    opt_cfg: Optional[OptimizerConfig] = None,
    cfg: Optional[QuadratureConfig] = None,
    initial: Optional[ShellPmf] = None,
    threads: Optional[int] = None,
) -> OptimizeResult:
    """Estimate the secrecy capacity and a KKT-certified shell pmf.

    Starts from the single shell at R unless ``initial`` is given. Each
    escalation runs inner_rounds alternations of gradient ascent and the
    probability update, then validates; failures add a shell at the
    density's maximizer.
    """
    opt_cfg = opt_cfg or get_optimizer_config()
    cfg = cfg or get_quadrature_config()
    radius = params.radius

    if params.degraded_direction or radius == 0.0:
        kkt = KktReport(valid=True, worst_support_violation=0.0, worst_interior_violation=0.0,
                        argmax_t=radius, xi_at_radius=0.0, epsilon=opt_cfg.epsilon)
        return OptimizeResult(pmf=ShellPmf.single_shell(radius), capacity=0.0, kkt=kkt)

    pmf = _ensure_outer_shell(initial or ShellPmf.single_shell(radius), params)
    objectives: list[float] = []
    trace: list[TracePoint] = []
    points_added = 0

    escalation = 0
    while True:
        for round_ in range(opt_cfg.inner_rounds):
            previous = pmf
            pmf = _ascend(pmf, params, opt_cfg, cfg, objectives, trace, escalation, round_)
            pmf = blahut_arimoto_step(pmf, params, opt_cfg, cfg)
            trace.append(TracePoint(escalation=escalation, round=round_, phase="probabilities",
                                    objective=secrecy_information(pmf, params, cfg), pmf=pmf))
            if _same_pmf(previous, pmf, opt_cfg.ga_tol):
                break

        kkt = kkt_validate(pmf, params, cfg=cfg, threads=threads, opt_cfg=opt_cfg)
        result = OptimizeResult(pmf=pmf, capacity=kkt.xi_at_radius, kkt=kkt, objective_trace=list(objectives),
                                trace=list(trace), points_added=points_added)
        if kkt.valid:
            logger.info(
                f"[Optimizer] n={params.n} R={radius:g}: {pmf.size} shells, "
                f"capacity {result.capacity:.9f} nats after {points_added} added points"
            )
            return result

        partial = result.model_copy(update={"partial": True})
        if escalation == opt_cfg.max_escalations:
            raise NonConvergence(
                f"no KKT certificate after {opt_cfg.max_escalations} escalations "
                f"(interior violation {kkt.worst_interior_violation:.3e})",
                partial=partial,
            )
        try:
            pmf = add_point(pmf, kkt, opt_cfg.max_points)
        except TooManyPoints as e:
            raise TooManyPoints(str(e), partial=partial) from e
        points_added += 1
        escalation += 1
        logger.info(f"[Optimizer] KKT failed, added shell at {kkt.argmax_t:.6f} (K={pmf.size})")
