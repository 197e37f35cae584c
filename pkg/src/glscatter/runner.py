"""Subcommand bodies: each builds a section of named checks, data and CSV tables."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import deformation as dfm
from . import oscillatory as osc
from . import scattering as sc
from .config import ExperimentConfig
from .fock import (
    FockOperator,
    FockSpace,
    FockVector,
    ModeSet,
    OrderingError,
    create,
    ordered_basis,
)
from .geometry import (
    ConvexRegion,
    LorentzMap,
    Wedge,
    minkowski_dot,
    precursor,
    precursor_covariance_check,
    random_lorentz,
    standard_warping,
    warping_for_wedge,
)
from .warped import SpectralDecomposition, random_ladder_polynomial, verify_warp_properties, warp
from .wavepacket import (
    KGSolution,
    MomentumProfile,
    decay_scan,
    decay_slope,
    on_shell,
    ordered,
    velocity_support,
)

SUBCOMMANDS = ("geometry", "packet", "warp-verify", "smatrix", "defw-verify", "completeness", "oscint")


@dataclass
class Section:
    checks: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def check(self, name: str, value: float, tolerance: float, relation: str = "le", **extra) -> bool:
        value = float(value)
        ok = value <= tolerance if relation == "le" else value >= tolerance
        self.checks[name] = {"value": value, "tolerance": float(tolerance), "relation": relation, "passed": bool(ok)}
        self.checks[name].update(extra)
        return ok

    def flag(self, name: str, ok: bool, message: str = "") -> bool:
        self.checks[name] = {"passed": bool(ok), "message": message}
        return ok

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def as_dict(self) -> dict:
        return {"checks": self.checks, "data": self.data, "passed": self.passed}


def _space(cfg: ExperimentConfig, n_max: int | None = None) -> FockSpace:
    modes = ModeSet(cfg.dim, cfg.model.mass, cfg.mode_momenta())
    return FockSpace(modes, cfg.modes.n_max if n_max is None else n_max)


def _tuple_key(t) -> str:
    return "-".join(str(i) for i in t)


# --- geometry ------------------------------------------------------------------


def run_geometry(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    tol = cfg.tolerances
    kappa = cfg.model.kappa
    exact, anti, cov, group = 0.0, 0.0, 0.0, 0.0
    for d in (2, 3, 4):
        eta = (cfg.model.eta if cfg.model.eta is not None else 3.0) if d == 4 else None
        Q = standard_warping(d, kappa, eta)
        expected = np.zeros((d, d))
        expected[0, 1] = expected[1, 0] = kappa
        if d == 4:
            expected[2, 3], expected[3, 2] = eta, -eta
        exact = max(exact, float(np.max(np.abs(Q.matrix - expected))))
        basis = np.eye(d)
        for p, q in itertools.product(basis, basis):
            anti = max(anti, abs(minkowski_dot(p, Q.apply(q)) + minkowski_dot(Q.apply(p), q)))
        W = Wedge.right(d)
        for _ in range(100):
            lam = random_lorentz(d, rng)
            lhs = warping_for_wedge(W.transform(lam), Q).matrix
            rhs = lam.matrix @ Q.matrix @ lam.inverse().matrix
            cov = max(cov, float(np.max(np.abs(lhs - rhs))))
            lam2 = random_lorentz(d, rng)
            two = warping_for_wedge(W.transform(lam).transform(lam2), Q).matrix
            step = warping_for_wedge(W.transform(lam), Q).conjugate(lam2).matrix
            group = max(group, float(np.max(np.abs(two - step))))
    sec.check("warping_exact", exact, 0.0)
    sec.check("warping_antisymmetry", anti, tol.antisymmetry)
    sec.check("warping_covariance", cov, tol.covariance)
    sec.check("warping_group_action", group, tol.covariance)

    d = cfg.dim
    W = cfg.wedge_object()
    fails, reversal_fails = 0, 0
    for _ in range(100):
        left = ConvexRegion(rng.normal(size=(3, d)) * 0.3)
        right = ConvexRegion(rng.normal(size=(3, d)) * 0.3 + np.r_[0.0, 1.5, np.zeros(d - 2)])
        lam = random_lorentz(d, rng) if d > 2 else LorentzMap.boost(2, rng.uniform(-1.5, 1.5))
        a = rng.normal(size=d)
        if not precursor_covariance_check(left, right, W, lam, a, 1e-9):
            fails += 1
        if precursor(left, right, W, 1e-9) != precursor(right, left, W.complement(), 1e-9):
            reversal_fails += 1
    sec.check("precursor_covariance_failures", fails, 0)
    sec.check("precursor_complement_failures", reversal_fails, 0)

    modes = ModeSet(d, cfg.model.mass, cfg.mode_momenta())
    sec.check("mode_mass_shell", modes.mass_shell_residual(), tol.mass_shell)
    Qw = warping_for_wedge(W, cfg.warping())
    sec.data["wedge_warping"] = Qw.matrix
    return sec


# --- packets ------------------------------------------------------------------


def run_packet(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    tol = cfg.tolerances
    m = cfg.model.mass
    W = cfg.wedge_object()
    fs = cfg.packet_solutions()
    dec = cfg.decay
    bump = KGSolution(MomentumProfile(dec.center, dec.radius, dec.smoothness), m)

    shell = 0.0
    for f in fs + [bump]:
        p = on_shell(m, f.profile.support.vertices)
        shell = max(shell, float(np.max(np.abs(minkowski_dot(p, p) - m * m))))
    sec.check("packet_mass_shell", shell, tol.mass_shell)

    sec.data["velocity_supports"] = [velocity_support(f).region.vertices for f in fs]
    sec.data["ordered_out"] = ordered(fs, W, direction="out") if fs else True
    sec.data["ordered_in"] = ordered(fs, W, direction="in") if fs else True

    times = np.geomspace(dec.t_min, dec.t_max, dec.samples)
    outside = decay_scan(bump, dec.outside_velocity, times, dec.points)
    inside = decay_scan(bump, dec.inside_velocity, times, dec.points)
    sec.tables["decay_outside.csv"] = (("tau", "abs_f"), outside)
    sec.tables["decay_inside.csv"] = (("tau", "abs_f"), inside)
    sec.check("decay_slope_outside", decay_slope(outside), tol.decay_outside, "le")
    sec.check("decay_slope_inside", decay_slope(inside), tol.decay_inside, "ge")
    return sec


# --- warped convolution -----------------------------------------------------------


def run_warp(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    tol = cfg.tolerances.warp
    sp = _space(cfg, cfg.warp.n_max)
    Q = warping_for_wedge(cfg.wedge_object(), cfg.warping())
    spectrum = SpectralDecomposition(sp)
    boosts = [LorentzMap.boost(sp.dim, r) for r in cfg.warp.boost_rapidities]
    worst: dict[str, float] = {}
    for _ in range(cfg.warp.operators):
        A = random_ladder_polynomial(sp, rng)
        res = verify_warp_properties(A, Q, rng, cfg.warp.translations, boosts, spectrum)
        for k, v in res.items():
            worst[k] = max(worst.get(k, 0.0), v)
    for k in sorted(worst):
        sec.check(f"property_{k}", worst[k], tol)

    ident = FockOperator.identity(sp)
    sec.check("identity_invariant", warp(ident, Q).distance(ident), tol)
    sec.check("spectral_completeness", spectrum.completeness_residual(), 0.0)
    sec.check("spectral_orthogonality", spectrum.orthogonality_residual(), 0.0)
    sec.flag("spectral_condition", spectrum.spectral_condition())

    # deformed exchange phase on two-particle states
    omega = FockVector.vacuum(sp)
    k = sp.modes.on_shell
    dev = 0.0
    if sp.n_max >= 2:
        for i, j in itertools.permutations(range(sp.M), 2):
            ai, aj = warp(create(sp, i), Q), warp(create(sp, j), Q)
            lhs = ai.apply(aj.apply(omega))
            rhs = aj.apply(ai.apply(omega)) * np.exp(2j * minkowski_dot(k[i], Q.apply(k[j])))
            dev = max(dev, (lhs - rhs).norm())
    sec.check("exchange_phase", dev, tol)
    sec.data["groups"] = len(spectrum)
    return sec


# --- S-matrix ---------------------------------------------------------------------


def _ordering_of(fs, W) -> str | None:
    if ordered(fs, W, direction="in"):
        return "in"
    if ordered(fs, W, direction="out"):
        return "out"
    return None


def run_smatrix(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    tol = cfg.tolerances
    W = cfg.wedge_object()
    Q0 = cfg.warping()
    Q = warping_for_wedge(W, Q0)
    fs = cfg.packet_solutions()

    direction = _ordering_of(fs, W) if fs else "in"
    if not sec.flag(
        "ordering_gate",
        direction is not None,
        "" if direction else "packets are neither out- nor in-ordered with respect to the wedge",
    ):
        return sec

    n_top = min(cfg.smatrix.max_particles, cfg.modes.n_max, len(cfg.modes.momenta))
    sp = _space(cfg, n_top)
    uni = fac = calcs = calcsww = suni = swap = 0.0
    phases = {}
    for n in range(1, n_top + 1):
        opp = dfm.gl_smatrix(sp, W, "opposite", Q0, n)
        same = dfm.gl_smatrix(sp, W, "same", Q0, n)
        uni = max(uni, opp.unitarity_residual(), same.unitarity_residual())
        fac = max(fac, dfm.pairwise_factorization_residual(sp, 2 * Q, list(opp.cols)))
        S0 = dfm.free_smatrix(sp, W.complement(), W, n)
        calcs = max(calcs, dfm.compose_deformed_smatrix(sp, S0, W.complement(), W, Q0).distance(opp))
        S0s = dfm.free_smatrix(sp, W, W, n)
        calcsww = max(calcsww, dfm.compose_deformed_smatrix(sp, S0s, W, W, Q0).distance(same))
        swap = max(swap, dfm.wedge_swap_check(sp, W, n)["deviation"])
        G = dfm.pair_table(sp, 2 * Q)
        for t in opp.cols:
            phases[_tuple_key(t)] = dfm.tuple_phase(G, t)
    sq, sq_neg = dfm.s_q(sp, Q), dfm.s_q(sp, -Q)
    suni = sq.H.distance(sq_neg)
    sec.check("unitarity", uni, tol.unitarity)
    sec.check("pairwise_factorization", fac, tol.factorization)
    sec.check("opposite_wedge_identity", calcs, tol.smatrix_identity)
    sec.check("same_wedge_identity", calcsww, tol.smatrix_identity)
    sec.check("adjoint_is_negated_warping", suni, tol.smatrix_identity)
    sec.check("complement_swap", swap, tol.swap)

    # scattering amplitude of the configured packets against the predicted phases
    if fs:
        fin = fs if direction == "in" else fs[::-1]
        B_in = sc.creation_approximant(sp, Q)
        B_out = sc.creation_approximant(sp, -Q)
        psi_in = sc.deformed_product_state(sp, fin, W, Q0, 0.0, "in", B=B_in)
        psi_out = sc.deformed_product_state(sp, fin, W.complement(), Q0, 0.0, "out", B=B_out)
        amp = psi_out.inner(psi_in)
        prod = FockVector.product(sp, [sc.profile_amplitudes(sp, f) for f in fin])
        n = len(fin)
        t_all = sp.tuples(n)
        G = dfm.pair_table(sp, 2 * Q)
        weights = np.abs(prod.sector(n)) ** 2
        predicted = sum(w * np.exp(1j * dfm.tuple_phase(G, t)) for w, t in zip(weights, t_all) if w > 0)
        scale = max(1.0, abs(predicted))
        sec.check("packet_amplitude", abs(amp - predicted) / scale, tol.unitarity)
        sec.data["packet_amplitude"] = [amp.real, amp.imag]
        sec.data["packet_ordering"] = direction

    sec.data["phases"] = phases
    sec.data["pair_factors"] = dfm.pair_table(sp, 2 * Q)
    sec.data["unitarity_residual"] = uni
    return sec


# --- deformed wave operators -----------------------------------------------------


def run_defw(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    tol = cfg.tolerances
    W = cfg.wedge_object()
    sct = cfg.scattering
    n_top = min(max(sct.n_values), len(cfg.modes.momenta))
    sp = _space(cfg, n_top)
    worst_sq = worst_chain = tau_dev = swap_dev = one_dev = iso = 0.0
    runs = 0
    for kappa in sct.kappas:
        Q0 = standard_warping(cfg.dim, kappa, cfg.model.eta if cfg.dim == 4 else None)
        B = sc.creation_approximant(sp, warping_for_wedge(W, Q0))
        Bc = sc.creation_approximant(sp, warping_for_wedge(W.complement(), Q0))
        for n in sct.n_values:
            if n > n_top:
                continue
            for direction in ("out", "in"):
                for t in ordered_basis(sp, W, direction, n):
                    fs = [sc.mode_packet(sp, i) for i in t]
                    r = sc.verify_defw(sp, fs, W, Q0, sct.tau, direction, B=B)
                    worst_sq = max(worst_sq, r["delta_sq"])
                    worst_chain = max(worst_chain, r["delta_chain"])
                    runs += 1
                    if direction == "out":
                        s0 = sc.deformed_product_state(sp, fs, W, Q0, 0.0, B=B)
                        tau_dev = max(tau_dev, (s0 - sc.deformed_product_state(sp, fs, W, Q0, sct.tau, B=B)).norm())
                        sw = sc.deformed_product_state(sp, fs[::-1], W.complement(), Q0, 0.0, B=Bc)
                        swap_dev = max(swap_dev, (s0 - sw).norm())
                        iso = max(iso, abs(s0.norm() ** 2 - 1.0))
        for i in range(sp.M):
            f = [sc.mode_packet(sp, i)]
            one = sc.deformed_product_state(sp, f, W, Q0, sct.tau, B=B)
            one_dev = max(one_dev, (one - sc.undeformed_product(sp, f).as_kind("bosonic")).norm())
    sec.check("delta_sq", worst_sq, tol.defw)
    sec.check("delta_chain", worst_chain, tol.defw)
    sec.check("tau_independence", tau_dev, tol.smatrix_identity)
    sec.check("complement_swap", swap_dev, tol.warp)
    sec.check("one_particle", one_dev, tol.warp)
    sec.check("product_isometry", iso, tol.warp)

    wdev = 0.0
    for n in range(1, n_top + 1):
        for direction in ("out", "in"):
            wdev = max(wdev, sc.wave_operator_free(sp, W, direction, n).isometry_residual())
        Sfree = dfm.free_smatrix(sp, W, W, n)
        wdev = max(wdev, Sfree.distance(dfm.reversal_map(Sfree.cols)))
    sec.check("free_wave_operators", wdev, tol.swap)

    fs = cfg.packet_solutions()
    if fs and len(fs) <= sp.n_max:
        direction = _ordering_of(fs, W)
        if sec.flag("packet_ordering_gate", direction is not None,
                    "" if direction else "configured packets are not ordered with respect to the wedge"):
            r = sc.verify_defw(sp, fs, W, cfg.warping(), sct.tau, direction)
            scale = max(1.0, r["norm"])
            sec.check("packet_delta_sq", r["delta_sq"] / scale, tol.defw)
            sec.check("packet_delta_chain", r["delta_chain"] / scale, tol.defw)
            sec.check("packet_discarded", r["discarded"], 0.0)
            sec.data["packet_norm"] = r["norm"]
    sec.data["configurations"] = runs
    return sec


# --- completeness -------------------------------------------------------------


def run_completeness(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    c = cfg.completeness
    W = cfg.wedge_object()
    d = cfg.dim
    rows = []
    deficit = instab = 0
    leak = 0.0
    for M in c.mode_counts:
        moms = np.zeros((M, d - 1))
        moms[:, 0] = np.linspace(-c.span, c.span, M)
        for n in c.n_values:
            if n > M:
                continue
            sp = FockSpace(ModeSet(d, cfg.model.mass, moms), n)
            for kappa in c.kappas:
                Q0 = standard_warping(d, kappa, cfg.model.eta if d == 4 else None)
                for direction in ("out", "in"):
                    r = sc.completeness_check(sp, W, direction, n, Q0)
                    deficit = max(deficit, r["dimension"] - r["rank"])
                    instab = max(instab, abs(r["rank"] - r["rank_undeformed"]))
                    leak = max(leak, r["subspace_leak"])
                    rows.append({**r, "kappa": kappa})
    sec.check("rank_deficit", deficit, 0)
    sec.check("rank_instability", instab, 0)
    sec.check("subspace_leak", leak, cfg.tolerances.warp)
    sec.data["runs"] = rows
    return sec


# --- oscillatory integrals ---------------------------------------------------


def run_oscint(cfg: ExperimentConfig, rng: np.random.Generator) -> Section:
    sec = Section()
    o = cfg.oscint
    tol = cfg.tolerances
    spec = osc.QuadratureSpec(o.radius, o.points, o.eps)
    grid = np.linspace(-o.momentum_bound, o.momentum_bound, 5)
    quad = max(
        abs(osc.j1_quadrature(spec, p, q) - osc.j1_closed(o.eps, p, q)) for p in grid for q in grid
    )
    sec.check("quadrature_vs_closed", quad, tol.quadrature)

    scan = osc.epsilon_scan(o.scan_p, o.scan_q, o.scan_eps, o.points, o.radius)
    sec.tables["eps_scan.csv"] = (("eps", "abs_err"), scan)
    sec.check("eps_slope_error", abs(osc.loglog_slope(scan) - 1.0), tol.slope, slope=osc.loglog_slope(scan))

    fd = max(
        osc.dreg_identity_check(o.fd_half_width, h=o.fd_step, sign=s) for s in (1, -1)
    )
    exact = max(osc.dreg_identity_check(o.fd_half_width, sign=s) for s in (1, -1))
    sec.check("dreg_finite_difference", fd, tol.dreg)
    sec.check("dreg_analytic", exact, 1e-14)

    d = cfg.dim
    modes = ModeSet(d, cfg.model.mass, cfg.mode_momenta())
    Q = warping_for_wedge(cfg.wedge_object(), cfg.warping())
    dev, bound = 0.0, 0.0
    for _ in range(o.phase_pairs):
        ki, kj = on_shell(cfg.model.mass, rng.normal(size=(2, d - 1)))
        direct = np.exp(1j * minkowski_dot(ki, Q.apply(kj)))
        dev = max(dev, abs(osc.deformation_phase_from_jd(ki, kj, Q) - direct))
        bound = max(bound, abs(osc.jd_product(o.eps, ki, kj, Q)))
    k = modes.on_shell
    for i, j in itertools.permutations(range(modes.size), 2):
        e_i = FockVector.basis(FockSpace(modes, 2), (i,))
        e_j = FockVector.basis(FockSpace(modes, 2), (j,))
        tens = dfm.deformed_tensor(e_i, e_j, Q).sector(2)[i * modes.size + j]
        dev = max(dev, abs(osc.deformation_phase_from_jd(k[i], k[j], Q) - tens))
    sec.check("jd_limit_vs_deformation_phase", dev, tol.warp)
    sec.check("jd_modulus_bound", bound, 1.0)

    reg = osc.regulator_independence(o.scan_p, o.scan_q, o.regulator_eps, o.regulator_points)
    sec.check("regulator_independence", max(reg["bump_vs_limit"], reg["bump_vs_gaussian"]), tol.regulator)
    sec.data["regulator"] = reg
    return sec


RUNNERS = {
    "geometry": run_geometry,
    "packet": run_packet,
    "warp-verify": run_warp,
    "smatrix": run_smatrix,
    "defw-verify": run_defw,
    "completeness": run_completeness,
    "oscint": run_oscint,
}


def run_section(name: str, cfg: ExperimentConfig, seed: int) -> Section:
    # per-subcommand stream so that `all` reproduces the individual runs
    rng = np.random.default_rng([seed, SUBCOMMANDS.index(name)])
    try:
        return RUNNERS[name](cfg, rng)
    except OrderingError as exc:
        sec = Section()
        sec.flag("ordering_gate", False, str(exc))
        return sec
