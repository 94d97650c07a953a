"""Exit criteria. Each test records one PASS/FAIL line, printed in the terminal summary."""

import io
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS, random_nonexpansive, random_symmetric, random_with_fix
from fixpoint.analysis import commutation_defect, lambda_bar, norm_profile
from fixpoint.experiments import ExperimentConfig, emit_csv, run_experiment
from fixpoint.iteration import StoppingRule, Termination, fejer_check, km_run
from fixpoint.operators import make_affine, make_linear, project_fix, project_fix_affine, relax_apply
from fixpoint.schedules import Adaptive, BandedRandom, Constant, Explicit, lambda_opt


class Criterion:
    def __init__(self, number, budget=None):
        self.number = number
        self.budget = budget
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        ok = exc_type is None
        line = f"{self.detail} ({elapsed:.2f} s"
        if self.budget is not None:
            line += f", budget {self.budget} s"
            if elapsed >= self.budget:
                ok = False
        line += ")"
        if exc_type is not None:
            line += f" -- {exc_type.__name__}: {exc}"
        ACCEPTANCE_RESULTS[self.number] = (ok, line)
        if exc_type is None and not ok:
            raise AssertionError(f"criterion {self.number} exceeded its runtime budget: {line}")
        return False


@pytest.fixture(scope="module")
def population():
    """1000 certified nonexpansive operators (dims 2-8) with 10 non-fixed points each."""
    rng = np.random.default_rng(20240405)
    pop = []
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        R = make_linear(random_nonexpansive(rng, d))
        X = rng.standard_normal((10, d))
        pop.append((R, X))
    return pop


def test_c01_lambda_x_lower_bound(population):
    with Criterion(1, budget=5) as c:
        worst = np.inf
        for R, X in population:
            for x in X:
                worst = min(worst, lambda_opt(x, R.matrix @ x))
        c.detail = f"min lambda_x over 10^4 (R, x) = {worst:.12f} >= 0.5 - 1e-8"
        assert worst >= 0.5 - 1e-8


def test_c02_sandwich(population):
    with Criterion(2, budget=10) as c:
        lower_viol = upper_viol = 0.0
        for R, X in population:
            for x in X:
                lx = lambda_opt(x, R.matrix @ x)
                at_opt = np.linalg.norm(relax_apply(R, lx, x))
                for eps in (0.01, 0.1, 0.5):
                    grid = np.linspace(eps, 2 * lx - eps, 50)
                    vals = np.sqrt(norm_profile(R, x, grid).values)
                    at_eps = np.linalg.norm(relax_apply(R, eps, x))
                    lower_viol = max(lower_viol, at_opt - vals.min())
                    upper_viol = max(upper_viol, vals.max() - at_eps)
        c.detail = f"max violation lower {lower_viol:.2e}, upper {upper_viol:.2e} <= 1e-10"
        assert lower_viol <= 1e-10 and upper_viol <= 1e-10


def test_c03_commutation(population):
    with Criterion(3, budget=5) as c:
        rng = np.random.default_rng(3)
        worst = 0.0
        for i in rng.integers(0, len(population), 10_000):
            R, X = population[i]
            lam, mu = rng.uniform(-2, 2, 2)
            x = rng.standard_normal(R.dim)
            scale = (1 + np.linalg.norm(x)) * (1 + abs(lam)) * (1 + abs(mu))
            worst = max(worst, commutation_defect(R, lam, mu, x) / scale)
        c.detail = f"max scaled defect over 10^4 samples = {worst:.2e} <= 1e-12"
        assert worst <= 1e-12


def test_c04_product_domination():
    with Criterion(4, budget=10) as c:
        rng = np.random.default_rng(4)
        worst = -np.inf
        steps = 150
        for _ in range(100):
            d = int(rng.integers(2, 7))
            M, F = random_with_fix(rng, d, int(rng.integers(1, d)))
            R = make_linear(M)
            eps = float(rng.uniform(0.01, 0.3))
            x0 = rng.standard_normal(d)
            banded = BandedRandom(eps, int(rng.integers(2**32)))
            stop = StoppingRule(max_iter=steps, residual_threshold=1e-300)
            for _ in range(10):
                y = F @ rng.standard_normal(F.shape[1])
                a = km_run(R, banded, x0, stop, monitor=y).distance_history
                b = km_run(R, Constant(eps), x0, stop, monitor=y).distance_history
                n = min(len(a), len(b))
                worst = max(worst, float(np.max(np.subtract(a[:n], b[:n]))))
        c.detail = f"max (banded - constant-eps) distance over all steps = {worst:.2e} <= 1e-10"
        assert worst <= 1e-10


@pytest.fixture(scope="module")
def main_theorem_runs():
    """50 operators with nontrivial Fix R, banded eps = 0.05, three monitored fixed points each."""
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    runs = []
    for _ in range(50):
        d = int(rng.integers(2, 7))
        M, F = random_with_fix(rng, d, int(rng.integers(1, d + 1)))
        R = make_linear(M)
        x0 = rng.standard_normal(d)
        sched = BandedRandom(0.05, int(rng.integers(2**32)))
        stop = StoppingRule(max_iter=100_000, residual_threshold=1e-10)
        results = []
        for _ in range(3):
            y = F @ rng.standard_normal(F.shape[1])
            results.append((y, km_run(R, sched, x0, stop, monitor=y)))
        runs.append((R, x0, results))
    return runs, time.perf_counter() - t0


def test_c05_main_theorem_limit(main_theorem_runs):
    runs, build_time = main_theorem_runs
    with Criterion(5, budget=30) as c:
        worst = 0.0
        for R, x0, results in runs:
            res = results[0][1]
            assert res.termination is Termination.RESIDUAL_REACHED
            worst = max(worst, float(np.linalg.norm(res.final_point - project_fix(R, x0))))
        c.detail = f"max ||x_N - P_Fix x0|| over 50 runs = {worst:.2e} <= 1e-6 (runs took {build_time:.2f} s)"
        assert worst <= 1e-6
        assert build_time < 30


def test_c06_fejer(main_theorem_runs):
    runs, _ = main_theorem_runs
    with Criterion(6) as c:
        worst = -np.inf
        ok = True
        for R, x0, results in runs:
            for y, res in results:
                ok &= fejer_check(res, y, 1e-10)
                worst = max(worst, float(np.max(np.diff(res.distance_history), initial=-np.inf)))
        c.detail = f"max per-step distance increase over 150 histories = {worst:.2e} <= 1e-10"
        assert ok


def test_c07_affine():
    with Criterion(7, budget=30) as c:
        rng = np.random.default_rng(7)
        worst_traj = worst_lim = 0.0
        for _ in range(50):
            d = int(rng.integers(2, 7))
            M, _ = random_with_fix(rng, d, int(rng.integers(0, d)))
            R = make_linear(M)
            S = make_affine(R, (np.eye(d) - M) @ (3 * rng.standard_normal(d)))
            x0 = rng.standard_normal(d)
            sched = BandedRandom(0.05, int(rng.integers(2**32)))
            stop = StoppingRule(max_iter=100_000, residual_threshold=1e-10)
            rs = km_run(S, sched, x0, stop, record_trajectory=True)
            rr = km_run(R, sched, x0 - S.anchor, stop, record_trajectory=True)
            for xs, xr in zip(rs.trajectory, rr.trajectory):
                worst_traj = max(worst_traj, np.linalg.norm(xs - (S.anchor + xr)) / (1 + np.linalg.norm(xs)))
            worst_lim = max(worst_lim, np.linalg.norm(rs.final_point - project_fix_affine(S, x0)))
        c.detail = f"trajectory identity {worst_traj:.2e} <= 1e-10 rel; limit error {worst_lim:.2e} <= 1e-6"
        assert worst_traj <= 1e-10 and worst_lim <= 1e-6


def test_c08_averaged_overrelaxation():
    with Criterion(8) as c:
        R = make_linear(np.diag([0.7, 0.2]))
        step = np.column_stack([relax_apply(R, 2.0, e) for e in np.eye(2)])
        np.testing.assert_allclose(step, np.diag([0.4, -0.6]), atol=1e-15)
        r = km_run(R, Constant(2.0), [1.0, 1.0], StoppingRule(max_iter=1000, norm_threshold=1e-10))
        assert r.termination is Termination.NORM_REACHED

        rng = np.random.default_rng(8)
        delta = 0.05
        worst = 0.0
        for _ in range(20):
            d = int(rng.integers(2, 6))
            k = int(rng.integers(0, d))
            rmin = rng.uniform(-0.9, 0.5)
            eigs = np.concatenate([np.ones(k), [rmin], rng.uniform(rmin, 0.9, d - k - 1)])
            M, _ = random_symmetric(rng, d, eigs)
            Rop = make_linear(M)
            kappa = lambda_bar(Rop).kappa
            values = rng.uniform(delta, 1 / kappa - delta, 20_000)
            sched = Explicit(values, fallback=0.5 / kappa)
            x0 = rng.standard_normal(d)
            res = km_run(Rop, sched, x0, StoppingRule(max_iter=100_000, residual_threshold=1e-10))
            assert res.converged
            worst = max(worst, np.linalg.norm(res.final_point - project_fix(Rop, x0)))
        c.detail = f"mu = 2 on diag(0.7, 0.2) converges; 20 symmetric runs max limit error {worst:.2e} <= 1e-6"
        assert worst <= 1e-6


def test_c09_lambda_bar_identities():
    with Criterion(9) as c:
        rng = np.random.default_rng(9)
        worst_exact = worst_kappa = 0.0
        worst_sampled = np.inf
        worst_oracle = 0.0
        for i in range(100):
            d = int(rng.integers(2, 7))
            eigs = rng.uniform(-1, 1, d)
            M, _ = random_symmetric(rng, d, eigs)
            R = make_linear(M)
            exact = lambda_bar(R, "eigen_exact")
            closed = 1 / (1 - eigs.min())
            worst_exact = max(worst_exact, abs(exact.lambda_bar - closed))
            worst_kappa = max(worst_kappa, abs(exact.kappa * exact.lambda_bar - 0.5))
            sampled = lambda_bar(R, "sampled", sample_count=20_000, seed=i)
            worst_sampled = min(worst_sampled, sampled.lambda_bar - exact.lambda_bar)
            if i < 5:
                # independent brute-force cross-check of the closed form
                Z = np.random.default_rng(i).standard_normal((1_000_000, d))
                D = Z - Z @ M.T
                brute = np.min(np.einsum("ij,ij->i", Z, D) / np.einsum("ij,ij->i", D, D))
                worst_oracle = max(worst_oracle, brute - closed)
                assert brute >= closed - 1e-8
        c.detail = (
            f"|exact - 1/(1-r_min)| {worst_exact:.2e} <= 1e-8; sampled - exact >= {worst_sampled:.2e}; "
            f"|kappa*lambda_bar - 1/2| {worst_kappa:.2e} <= 1e-10"
        )
        assert worst_exact <= 1e-8
        assert worst_sampled >= -1e-8
        assert worst_kappa <= 1e-10


def test_c10_closed_form_counts():
    with Criterion(10) as c:
        R = make_linear(np.diag([0.7, 0.2]))
        stop = StoppingRule(norm_threshold=1e-6)
        n_const = km_run(R, Constant(0.5), [1.0, 0.0], stop).iterations
        n_adapt = km_run(R, Adaptive(0.01), [1.0, 0.0], stop).iterations
        c.detail = f"constant 0.5 -> {n_const} (86), adaptive 0.01 -> {n_adapt} (40)"
        assert n_const == 86 and n_adapt == 40


def _figure_reports():
    out = {}
    for name, diag in (("a", [0.7, 0.2]), ("b", [-0.9, 0.5])):
        cfg = ExperimentConfig(make_linear(np.diag(diag)), num_trials=100, seed=0)
        report = run_experiment(cfg)
        buf = io.StringIO()
        emit_csv(report, buf)
        out[name] = (report, buf.getvalue().encode("utf-8"))
    return out


@pytest.fixture(scope="module")
def figure_one():
    t0 = time.perf_counter()
    reports = _figure_reports()
    return reports, time.perf_counter() - t0


def test_c11_figure_structure(figure_one):
    reports, elapsed = figure_one
    with Criterion(11) as c:
        ra, _ = reports["a"]
        rb, _ = reports["b"]
        grid = ra.config.lambda_grid
        step = grid[1] - grid[0]
        best_a = min(s.median for s in ra.per_lambda)
        ok_a1 = ra.lambda_opt_empirical == grid[-1]
        ok_a2 = abs(ra.abbr.median - best_a) <= 0.15 * best_a
        ok_b1 = abs(rb.lambda_opt_empirical - 2 / 2.4) <= step
        ok_b2 = rb.abbr.median < rb.per_lambda[-1].median
        c.detail = (
            f"(a) argmin {ra.lambda_opt_empirical:.6f} = 1-eps, aBBR median {ra.abbr.median:g} vs best {best_a:g}; "
            f"(b) argmin {rb.lambda_opt_empirical:.4f} vs 0.8333 (step {step:.4f}), "
            f"aBBR median {rb.abbr.median:g} < {rb.per_lambda[-1].median:g}; total {elapsed:.1f} s < 60 s"
        )
        assert ok_a1 and ok_a2 and ok_b1 and ok_b2
        assert elapsed < 60


def test_c12_determinism(figure_one):
    reports, _ = figure_one
    with Criterion(12) as c:
        again = _figure_reports()
        same = all(reports[k][1] == again[k][1] for k in reports)
        c.detail = f"repeat of criterion 11 CSVs byte-identical: {same} ({len(reports['a'][1])} + {len(reports['b'][1])} bytes)"
        assert same
