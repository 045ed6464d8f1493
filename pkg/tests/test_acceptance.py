"""End-to-end acceptance gate.

Each criterion is one test; running this module directly prints one
pass/fail line per criterion:

    python tests/test_acceptance.py

Under pytest, use ``pytest -s tests/test_acceptance.py`` to see the lines.
"""

import contextlib
import io
import math
import pathlib
import time

import numpy as np

from slhnet import (ExosystemClass, NaturalRate, Operator, SLHTriple,
                    basis_state, boundary_project, check_bounded_real,
                    check_dissipation, check_positive_real, coherent_state,
                    commutator, concatenate, conjugate_through, decay_fit,
                    expectation_trace, fock_ops, generator, lft,
                    mean_drift_matrix, qubit_ops, series,
                    stability_certificate, uncertainty_decompose)
from slhnet.cli import main as cli_main
from slhnet.dissipation import PassivityRate, StabilityBound
from slhnet.netspec import parse_netspec

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def _entry_diff(g1, g2):
    from slhnet import compose_spaces
    space = compose_spaces(g1.space, g2.space)
    a, b = g1.on_space(space), g2.on_space(space)
    err = (a.H - b.H).norm_max()
    if a.n:
        err = max(err, float(np.abs(a.s_dense() - b.s_dense()).max()),
                  float(np.abs(a.l_dense() - b.l_dense()).max()))
    return err


def _rand_unitary(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(m)
    return q


def _rand_system(rng, ops, channels=1):
    sp = ops["id"].space
    d = sp.dim
    u = _rand_unitary(rng, channels * d)
    s = [[Operator(sp, u[i * d:(i + 1) * d, j * d:(j + 1) * d])
          for j in range(channels)] for i in range(channels)]
    ell = [Operator(sp, rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
           for _ in range(channels)]
    h = Operator(sp, rng.normal(size=(d, d))
                 + 1j * rng.normal(size=(d, d))).herm_part()
    return SLHTriple(s, ell, h)


# ----------------------------------------------------------------------
# criterion 1: losslessness with the natural supply rate
# ----------------------------------------------------------------------

def criterion_01_losslessness():
    start = time.perf_counter()
    f = fock_ops(20, "cav")
    cavity = SLHTriple([[1]], [f["a"]], 0)
    grid = ExosystemClass.scalar_grid(channels=1)
    assert len(grid) == 25
    report = check_dissipation(cavity, f["n"], NaturalRate(), grid,
                               tol=1e-10)
    assert report.holds
    for sample in report.samples:
        assert sample.residue <= 1e-10, sample

    q = qubit_ops("qb")
    atom = SLHTriple([[1]], [q["sm"]], 0.5 * q["sz"])
    sigma1 = 0.5 * (q["id"] + q["sz"])
    report = check_dissipation(atom, sigma1, NaturalRate(), grid, tol=1e-10)
    assert report.holds
    for sample in report.samples:
        assert sample.residue <= 1e-10, sample
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"


# ----------------------------------------------------------------------
# criterion 2: two-level atom decay
# ----------------------------------------------------------------------

def criterion_02_atom_decay():
    start = time.perf_counter()
    q = qubit_ops("qb")
    atom = SLHTriple([[1]], [q["sm"]], 0)
    sigma1 = 0.5 * (q["id"] + q["sz"])
    rho0 = basis_state(atom.space, 0, "excited").to_density()
    trace = expectation_trace(atom, sigma1, rho0, t_final=5.0, dt=1e-3)
    exact = np.exp(-trace.times)
    rel = np.abs(trace.values - exact) / exact
    assert rel.max() <= 1e-6, f"max rel err {rel.max():.3e}"
    elapsed = time.perf_counter() - start
    assert elapsed < 2.0, f"took {elapsed:.2f}s"


# ----------------------------------------------------------------------
# criterion 3: cavity decay from a coherent state
# ----------------------------------------------------------------------

def criterion_03_cavity_decay():
    start = time.perf_counter()
    d = 20
    f = fock_ops(d, "cav")
    cavity = SLHTriple([[1]], [f["a"]], 0)
    rho0 = coherent_state(2.0, d, "cav").to_density()
    trace = expectation_trace(cavity, f["n"], rho0, t_final=5.0, dt=1e-3)
    exact = 4.0 * np.exp(-trace.times)
    rel = np.abs(trace.values - exact) / exact
    assert rel.max() <= 1e-4, f"max rel err {rel.max():.3e}"
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


# ----------------------------------------------------------------------
# criterion 4: regulation loop
# ----------------------------------------------------------------------

def criterion_04_regulation():
    # The regulated loop satisfies gen(V_d) + (1/2) V_d = -(1/2) V_d, an
    # exact operator identity away from the truncation boundary; the
    # certificate constant c = 1/2 is therefore a valid decay bound while
    # the true decay rate of <V_d(t)> is 1.
    d = 20
    alpha, nu, c = 1.0, -0.5, 0.5
    f = fock_ops(d, "cav")
    plant = SLHTriple([[1]], [f["a"]], 0)
    controller = SLHTriple([[1]], [nu], 0)
    loop = series(plant, controller)
    vd = (f["adag"] - np.conj(alpha)) * (f["a"] - alpha)

    identity_residue = boundary_project(
        generator(loop, vd) + c * vd - (-c * vd)).norm_max()
    assert identity_residue <= 1e-10, f"residue {identity_residue:.3e}"

    report = stability_certificate(loop, vd, c=c)
    assert report.holds and report.margin <= 1e-10

    rho0 = basis_state(loop.space, 0, "vacuum").to_density()
    trace = expectation_trace(loop, vd, rho0, t_final=5.0, dt=1e-3,
                              bound=StabilityBound(c=c, lam=0.0))
    fit = decay_fit(trace)
    assert abs(fit.rate - 1.0) <= 1e-3, f"fitted rate {fit.rate:.5f}"
    assert not trace.bound_violated  # decay rate 1 respects the c=1/2 bound


# ----------------------------------------------------------------------
# criterion 5: modulator equivalence
# ----------------------------------------------------------------------

def criterion_05_modulator_equivalence():
    d = 20
    nu = -0.5
    f = fock_ops(d, "cav")
    plant = SLHTriple([[1]], [f["a"]], 0)
    series_form = series(plant, SLHTriple([[1]], [nu], 0))
    displaced = concatenate(
        plant,
        SLHTriple(None, None, -1j * (nu * f["adag"] - np.conj(nu) * f["a"])))
    worst = 0.0
    space = f["id"].space
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            x = Operator(space, unit)
            diff = generator(series_form, x) - generator(displaced, x)
            worst = max(worst, diff.norm_max())
    assert worst <= 1e-10, f"max entry difference {worst:.3e}"


# ----------------------------------------------------------------------
# criterion 6: stabilization poles
# ----------------------------------------------------------------------

def criterion_06_stabilization_poles():
    d = 20
    f = fock_ops(d, "osc")
    a, adag = f["a"], f["adag"]
    plant = SLHTriple([[1]], [a + adag], 0)
    for k in (0.5, 1.0):
        feedback = SLHTriple([[1]], [k * (a - adag)], 0)
        drift = mean_drift_matrix(series(plant, feedback))
        eigs = sorted(e.real for e in drift.eigenvalues)
        assert abs(eigs[0] + 4 * k) <= 1e-8
        assert abs(eigs[1]) <= 1e-8
        passive = SLHTriple([[1]], [k * a], 0)
        drift_alt = mean_drift_matrix(series(plant, passive))
        assert all(e.real < 0 for e in drift_alt.eigenvalues)


# ----------------------------------------------------------------------
# criterion 7: positive real / bounded real certificates
# ----------------------------------------------------------------------

def criterion_07_pr_br_certificates():
    f = fock_ops(16, "cav")
    cavity = SLHTriple([[1]], [f["a"]], 0)
    pr, z = check_positive_real(cavity, f["n"], N=(f["a"],), lam=0.0,
                                tol=1e-9)
    assert pr.holds and pr.margin <= 1e-9
    assert (z[0] + f["a"]).norm_max() <= 1e-12
    br = check_bounded_real(cavity, f["n"], Z=1.0, N=(f["a"],), g=1.0,
                            tol=1e-9)
    assert br.holds and br.margin <= 1e-9
    assert br.extras["branch"] == "singular"

    q = qubit_ops("qb")
    atom = SLHTriple([[1]], [q["sm"]], 0)
    sigma1 = 0.5 * (q["id"] + q["sz"])
    pr, z = check_positive_real(atom, sigma1, N=(q["sm"],), lam=0.0, tol=1e-9)
    assert pr.holds and pr.margin <= 1e-9
    br = check_bounded_real(atom, sigma1, Z=1.0, N=(q["sm"],), g=1.0,
                            tol=1e-9)
    assert br.holds and br.margin <= 1e-9
    assert br.extras["branch"] == "singular"

    amplifier = SLHTriple([[1]], [math.sqrt(2.0) * f["adag"]], 0)
    bad, _ = check_positive_real(amplifier, f["n"], N=(), lam=2.0)
    assert not bad.holds
    assert bad.margin > 1.0  # strictly positive failure margin


# ----------------------------------------------------------------------
# criterion 8: uncertainty decomposition
# ----------------------------------------------------------------------

def criterion_08_uncertainty():
    d = 16
    f = fock_ops(d, "cav")
    omega = 0.7
    for eps in (0.1, -0.5):
        nominal, exo = uncertainty_decompose(f["a"], 0, epsilon=eps,
                                             d=omega * f["n"])
        perturbed = series(nominal, exo)
        shift = generator(perturbed, f["n"]) - generator(nominal, f["n"])
        expected = -(eps ** 2 + 2 * eps) * f["n"]
        assert (shift - expected).norm_max() <= 1e-10

    q = f["a"] + f["adag"]
    p = -1j * (f["a"] - f["adag"])
    lhs = -1j * commutator(q * q, omega * f["n"])
    rhs = omega * (q * p + p * q)
    assert (lhs - rhs).norm_max() <= 1e-10


# ----------------------------------------------------------------------
# criterion 9: network algebra property suite
# ----------------------------------------------------------------------

def criterion_09_network_algebra():
    start = time.perf_counter()
    rng = np.random.default_rng(20260809)
    q = qubit_ops("qb")
    sp = q["id"].space
    d = sp.dim
    ident = SLHTriple.identity(1)
    rounds = 200

    for _ in range(rounds):
        g1 = _rand_system(rng, q)
        g2 = _rand_system(rng, q)
        g3 = _rand_system(rng, q)

        # series associativity
        assert _entry_diff(series(series(g3, g2), g1),
                           series(g3, series(g2, g1))) <= 1e-9

        # inverse laws
        from slhnet import inverse
        assert _entry_diff(series(g1, inverse(g1)), ident) <= 1e-9
        assert _entry_diff(series(inverse(g1), g1), ident) <= 1e-9

        # factorization through static scattering
        stat = SLHTriple(g1.S, [0], 0)
        bare = SLHTriple(None, list(g1.L), g1.H)
        assert _entry_diff(series(bare, stat), g1) <= 1e-9
        sl = g1.s_dense().conj().T @ g1.l_dense()
        assert _entry_diff(
            series(stat, SLHTriple(None, [Operator(sp, sl)], g1.H)),
            g1) <= 1e-9

        # conjugation through a system (also cross-checks the closed form)
        assert _entry_diff(series(g2, g1),
                           series(g1, conjugate_through(g1, g2))) <= 1e-9

    for _ in range(rounds):
        # feedback collapse for a loop without self-scattering
        u = _rand_unitary(rng, d)
        v = _rand_unitary(rng, d)
        s = [[Operator.zero(sp), Operator(sp, u)],
             [Operator(sp, v), Operator.zero(sp)]]
        l1 = Operator(sp, rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        l2 = Operator(sp, rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        h = Operator(sp, rng.normal(size=(d, d))
                     + 1j * rng.normal(size=(d, d))).herm_part()
        looped = lft(SLHTriple(s, [l1, l2], h), (1, 1))
        from slhnet.network import im_op
        collapsed = SLHTriple(
            [[Operator(sp, u @ v)]], [l1 + Operator(sp, u) * l2],
            h + im_op(l1.adjoint() * Operator(sp, u) * l2))
        assert _entry_diff(looped, collapsed) <= 1e-9

        # scattering absorption into the supply rate
        g1 = _rand_system(rng, q)
        flat = SLHTriple(None, list(g1.L), g1.H)
        v_obs = 0.5 * (q["id"] + q["sz"])
        z = commutator(v_obs, g1.L[0])
        rate = PassivityRate(Z=(z,), N=(0.3 * q["sx"],), lam=0.4)
        w = complex(rng.normal(), rng.normal())
        w_triple = SLHTriple(None, [w], 0)
        from slhnet.dissipation import ExosystemSample
        direct = generator(series(g1, w_triple), v_obs) - rate.evaluate(
            g1, v_obs, ExosystemSample(w_triple, tuple(w_triple.L), (), (), ""))
        stat = SLHTriple(g1.S, [0], 0)
        stat_dag = SLHTriple(
            [[Operator(sp, g1.s_dense().conj().T)]], [0], 0)
        scattered = series(stat, w_triple)
        readback = series(stat_dag, scattered)
        sample = ExosystemSample(readback, tuple(readback.L), (), (), "")
        absorbed = generator(series(flat, scattered), v_obs) \
            - rate.evaluate(flat, v_obs, sample)
        m1 = float(np.linalg.eigvalsh(
            (direct.matrix + direct.matrix.conj().T) / 2).max())
        m2 = float(np.linalg.eigvalsh(
            (absorbed.matrix + absorbed.matrix.conj().T) / 2).max())
        assert abs(m1 - m2) <= 1e-9

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


# ----------------------------------------------------------------------
# criterion 10: decay bounds hold along simulated traces
# ----------------------------------------------------------------------

def criterion_10_stability_bounds():
    q = qubit_ops("qb")
    f = fock_ops(20, "cav")
    sigma1 = 0.5 * (q["id"] + q["sz"])
    atom = SLHTriple([[1]], [q["sm"]], 0)
    cavity = SLHTriple([[1]], [f["a"]], 0)
    loop = series(cavity, SLHTriple([[1]], [-0.5], 0))
    vd = (f["adag"] - 1.0) * (f["a"] - 1.0)
    closed = SLHTriple(None, None, 0 * q["id"])

    cases = [
        (atom, sigma1, 1.0, 0.0, basis_state(atom.space, 0).to_density()),
        (cavity, f["n"], 1.0, 0.0,
         coherent_state(2.0, 20, "cav").to_density()),
        (cavity, f["n"], 0.5, 1.0,
         coherent_state(2.0, 20, "cav").to_density()),
        (loop, vd, 0.5, 0.0, basis_state(loop.space, 0).to_density()),
        (closed, sigma1, 1.0, 1.0, basis_state(closed.space, 0).to_density()),
    ]
    for system, v, c, lam, rho0 in cases:
        report = stability_certificate(system, v, c=c, lam=lam)
        assert report.holds, (c, lam)
        trace = expectation_trace(system, v, rho0, t_final=4.0, dt=1e-3,
                                  bound=report.extras["bound"])
        assert trace.bound_excess <= 1e-6, (c, lam, trace.bound_excess)
        assert not trace.bound_violated


# ----------------------------------------------------------------------
# criterion 11: parser round trip and diagnostics
# ----------------------------------------------------------------------

def criterion_11_parser():
    for path in sorted(CORPUS.glob("*.net")):
        text = path.read_text()
        canon = parse_netspec(text).canonical()
        assert parse_netspec(canon).canonical() == canon, path.name

    expected = {
        "arity.net": ("E_ARITY", 2, 1),
        "nonunitary.net": ("E_UNITARY", 2, 1),
        "unknown_symbol.net": ("E_SYMBOL", 2, 28),
        "unknown_space.net": ("E_SPACE", 2, 28),
        "duplicate.net": ("E_DUPLICATE", 3, 1),
        "syntax.net": ("E_SYNTAX", 2, 35),
        "undeclared_top.net": ("E_UNDECLARED", 3, 1),
        "channel_mismatch.net": ("E_CHANNELS", 4, 1),
        "bad_loop.net": ("E_LOOP", 3, 1),
        "bad_fock_dim.net": ("E_DIM", 1, 1),
        "nonhermitian.net": ("E_HERMITIAN", 2, 1),
        "missing_top.net": ("E_TOP", 1, 1),
    }
    on_disk = {p.name for p in (CORPUS / "malformed").glob("*.net")}
    assert on_disk == set(expected)
    for name, (code, line, col) in expected.items():
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            rc = cli_main(["compose", str(CORPUS / "malformed" / name)])
        assert rc == 2, name
        assert f"error[{code}] {line}:{col}:" in err.getvalue(), name


# ----------------------------------------------------------------------
# harness
# ----------------------------------------------------------------------

CRITERIA = [
    (1, "losslessness on the amplitude grid", criterion_01_losslessness),
    (2, "atom decay accuracy", criterion_02_atom_decay),
    (3, "cavity decay accuracy", criterion_03_cavity_decay),
    (4, "regulation loop identity and decay", criterion_04_regulation),
    (5, "modulator equivalence", criterion_05_modulator_equivalence),
    (6, "stabilization poles", criterion_06_stabilization_poles),
    (7, "positive/bounded real certificates", criterion_07_pr_br_certificates),
    (8, "uncertainty decomposition", criterion_08_uncertainty),
    (9, "network algebra properties", criterion_09_network_algebra),
    (10, "stability bounds along traces", criterion_10_stability_bounds),
    (11, "parser round trip and diagnostics", criterion_11_parser),
]


def _run_and_report(num, name, fn):
    fn()
    print(f"acceptance {num:02d} ({name}): PASS")


def test_criterion_01():
    _run_and_report(*CRITERIA[0])


def test_criterion_02():
    _run_and_report(*CRITERIA[1])


def test_criterion_03():
    _run_and_report(*CRITERIA[2])


def test_criterion_04():
    _run_and_report(*CRITERIA[3])


def test_criterion_05():
    _run_and_report(*CRITERIA[4])


def test_criterion_06():
    _run_and_report(*CRITERIA[5])


def test_criterion_07():
    _run_and_report(*CRITERIA[6])


def test_criterion_08():
    _run_and_report(*CRITERIA[7])


def test_criterion_09():
    _run_and_report(*CRITERIA[8])


def test_criterion_10():
    _run_and_report(*CRITERIA[9])


def test_criterion_11():
    _run_and_report(*CRITERIA[10])


if __name__ == "__main__":
    failures = 0
    for num, name, fn in CRITERIA:
        try:
            fn()
        except Exception as exc:  # report and continue
            failures += 1
            print(f"acceptance {num:02d} ({name}): FAIL - {exc}")
        else:
            print(f"acceptance {num:02d} ({name}): PASS")
    raise SystemExit(1 if failures else 0)
