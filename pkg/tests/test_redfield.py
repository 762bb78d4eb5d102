import numpy as np
import pytest
import scipy.integrate

from tlfgrape import hilbert, redfield
from tlfgrape.hilbert import unvec, vec
from tlfgrape.redfield import (
    ModelParams,
    MotionalNarrowingWarning,
    bose,
    generator,
    hamiltonian,
    kappa_for_gamma,
    relaxation_superop,
    rtn_gamma,
    rtn_spectrum,
    sigma_tensor,
    spectral_density,
    t1_t2_rates,
)

BASE = ModelParams(e2=0.1, lam=0.1, kappa=0.005, temperature=0.2)
DECOUPLED = ModelParams(e2=0.1, lam=0.0, kappa=0.005, temperature=0.2)

# frozen scalar references, evaluated independently of the library code:
# coth(0.5) = (e + 1)/(e - 1) = 2.1639534137386528
COTH_HALF = 2.1639534137386528
GAMMA_BASE = 2.0 * 0.005 * 0.1 * COTH_HALF  # 2.1639534e-3
N_POINT_ONE = 1.5414940825367982  # 1/(e^0.5 - 1)
N_POINT_TWO = 0.5819767068693265  # 1/(e - 1)


# ---- model parameters -------------------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(e2=0.0, lam=0.1, kappa=0.005, temperature=0.2)
    with pytest.raises(ValueError):
        ModelParams(e2=0.1, lam=0.1, kappa=-0.1, temperature=0.2)
    with pytest.raises(ValueError):
        ModelParams(e2=0.1, lam=0.1, kappa=0.005, temperature=0.2, omega_c=1.0)


def test_motional_narrowing_warning():
    with pytest.warns(MotionalNarrowingWarning):
        ModelParams(e2=1.0, lam=0.1, kappa=2.0, temperature=1.0, omega_c=100.0)


# ---- Hamiltonian ------------------------------------------------------------


def test_hamiltonian_decoupled_spectrum():
    h = hamiltonian(DECOUPLED, 0.0)
    eps = np.sort(np.linalg.eigvalsh(h))
    assert np.allclose(eps, [-1.1, -0.9, 0.9, 1.1], atol=1e-12)


def test_hamiltonian_linear_in_control():
    d = hamiltonian(BASE, 0.7) - hamiltonian(BASE, 0.0)
    assert np.allclose(d, 0.7 * hilbert.pauli("z", "qubit"), atol=1e-14)
    assert np.allclose(redfield.control_operator(), hilbert.pauli("z", "qubit"))


def test_hamiltonian_spectrum_symmetric_at_zero_bias():
    h = hamiltonian(BASE, 0.0)
    # sigma_z tau_x anticommutes with every term of H(0)
    flip = hilbert.pauli("z", "qubit") @ hilbert.pauli("x", "tlf")
    assert np.max(np.abs(flip @ h + h @ flip)) < 1e-14
    eps = np.sort(np.linalg.eigvalsh(h))
    assert np.max(np.abs(eps + eps[::-1])) < 1e-12


def test_hamiltonian_stack():
    hs = hamiltonian(BASE, [0.0, 0.5])
    assert hs.shape == (2, 4, 4)
    assert np.array_equal(hs[1], hamiltonian(BASE, 0.5))


# ---- bath functions ---------------------------------------------------------


def test_spectral_density_support():
    assert spectral_density(-1.0, BASE) == 0.0
    assert abs(spectral_density(2.0, BASE) - 0.01) < 1e-15
    assert spectral_density(BASE.omega_c + 1e-9, BASE) == 0.0


def test_bose_value():
    assert abs(bose(0.1, 0.2) - N_POINT_ONE) < 1e-12


def test_bose_detailed_balance():
    rng = np.random.default_rng(5)
    for _ in range(10):
        w, t = rng.uniform(0.05, 2.0, 2)
        assert abs((bose(w, t) + 1.0) / bose(w, t) - np.exp(w / t)) < 1e-10


def test_low_frequency_limit():
    # J(w) n(w) -> kappa T as w -> 0, leading correction w/(2T)
    for w in (1e-4, 1e-6):
        val = spectral_density(w, BASE) * bose(w, BASE.temperature)
        rel = abs(val / (BASE.kappa * BASE.temperature) - 1.0)
        assert rel < w / BASE.temperature


# ---- rate tensors -----------------------------------------------------------


def test_sigma_zero_without_bath():
    params = ModelParams(e2=0.1, lam=0.1, kappa=0.0, temperature=0.2)
    for s in (0, 1):
        for sign in (+1, -1):
            assert np.max(np.abs(sigma_tensor(params, 0.0, s, sign))) < 1e-15


def test_sigma_weight_at_tlf_transition():
    # decoupled case: the only Bohr frequency tau+ connects is 2 E2, so the
    # largest element of Sigma_s^+ carries exactly the weight
    # J(2 E2)(n(2 E2) + s)/2, the normalization that makes the simulated
    # flip rate equal 2 kappa E2 coth(E2/T)
    for s in (0, 1):
        sp = sigma_tensor(DECOUPLED, 0.0, s, +1)
        expect = 0.5 * 0.001 * (N_POINT_TWO + s)
        assert abs(np.max(np.abs(sp)) - expect) < 1e-12


def test_sigma_adjoint_pairing():
    for s in (0, 1):
        sp = sigma_tensor(BASE, 0.3, s, +1)
        sm = sigma_tensor(BASE, 0.3, s, -1)
        assert np.array_equal(sm, sp.conj().T)


def lorentzian_weight(nu, s, params, eta=1e-3):
    """Quadrature oracle: the omega-integral with the delta function replaced
    by a narrow Lorentzian, times the same 1/2 normalization."""

    def f(w):
        occ = bose(w, params.temperature)
        return spectral_density(w, params) * (occ + s) * eta / ((w - nu) ** 2 + eta**2) / np.pi

    val, _ = scipy.integrate.quad(f, 0.0, params.omega_c, limit=400, points=[nu])
    return 0.5 * val


def test_sigma_matches_quadrature_oracle():
    # moderate cutoff keeps the quadrature cheap; weights at the TLF
    # transition of the decoupled model, 5% band for the finite eta
    params = ModelParams(e2=0.1, lam=0.0, kappa=0.005, temperature=0.2, omega_c=20.0)
    for s in (0, 1):
        sp = sigma_tensor(params, 0.0, s, +1)
        got = np.max(np.abs(sp))
        want = lorentzian_weight(2 * params.e2, s, params)
        assert abs(got - want) < 0.05 * want


def test_degenerate_weight_limit():
    w = redfield.bath_weight(np.array([0.0, 1e-12]), 0, BASE)
    assert np.allclose(w, 0.5 * BASE.kappa * BASE.temperature, atol=1e-18)


def test_bath_weight_rejects_bad_s():
    with pytest.raises(ValueError):
        redfield.bath_weight(0.1, 2, BASE)


# ---- relaxation superoperator ----------------------------------------------


def test_relaxation_zero_without_bath():
    params = ModelParams(e2=0.1, lam=0.1, kappa=0.0, temperature=0.2)
    assert np.max(np.abs(relaxation_superop(params, 0.4))) < 1e-15


def test_relaxation_matches_commutator_oracle():
    # rebuild the four commutator terms with plain matrix products and
    # compare against -Gamma acting on vec(rho)
    rng = np.random.default_rng(11)
    tp = hilbert.tau_ladder(+1)
    tm = hilbert.tau_ladder(-1)
    for e1 in (0.0, 0.37):
        s1m = sigma_tensor(BASE, e1, 1, -1)
        s0p = sigma_tensor(BASE, e1, 0, +1)
        s1p = sigma_tensor(BASE, e1, 1, +1)
        s0m = sigma_tensor(BASE, e1, 0, -1)
        gam = relaxation_superop(BASE, e1)
        for _ in range(5):
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            rho = (a + a.conj().T) / 2
            direct = (
                (tp @ (s1m @ rho) - (s1m @ rho) @ tp)
                + (tm @ (s0p @ rho) - (s0p @ rho) @ tm)
                - (tm @ (rho @ s1p) - (rho @ s1p) @ tm)
                - (tp @ (rho @ s0m) - (rho @ s0m) @ tp)
            )
            got = unvec(-gam @ vec(rho))
            assert np.max(np.abs(got - direct)) < 1e-12


def test_relaxation_trace_free():
    row = vec(np.eye(4)).conj() @ relaxation_superop(BASE, 0.2)
    assert np.max(np.abs(row)) < 1e-12


def test_tlf_relaxes_at_flip_rate():
    # decoupled TLF released from its excited state: exponential approach of
    # <tau_z> to the thermal value at rate gamma, within 10%
    gamma = rtn_gamma(DECOUPLED)
    gen = generator(DECOUPLED, 0.0)
    z_eq = -np.tanh(DECOUPLED.e2 / DECOUPLED.temperature)
    rho0 = np.kron(np.eye(2) / 2, np.diag([1.0, 0.0])).astype(complex)
    times = np.linspace(0.2 / gamma, 1.5 / gamma, 6)
    logs = []
    for t in times:
        rho = unvec(hilbert.expm(t * gen) @ vec(rho0))
        tlf = np.einsum("qtqs->ts", rho.reshape(2, 2, 2, 2))
        logs.append(np.log((tlf[0, 0] - tlf[1, 1]).real - z_eq))
    slope = np.polyfit(times, logs, 1)[0]
    assert abs(-slope / gamma - 1.0) < 0.10


def test_gamma_continuous_in_control():
    g0 = relaxation_superop(BASE, 0.4)
    for d in (1e-4, 1e-6):
        assert np.max(np.abs(relaxation_superop(BASE, 0.4 + d) - g0)) < 1e2 * d


# ---- full generator ---------------------------------------------------------


def test_generator_closed_antihermitian():
    params = ModelParams(e2=0.1, lam=0.1, kappa=0.0, temperature=0.2)
    ell = generator(params, 0.3)
    assert np.max(np.abs(ell + ell.conj().T)) < 1e-13


def test_generator_trace_preserving():
    for e1 in (-1.0, 0.0, 0.6):
        row = vec(np.eye(4)).conj() @ generator(BASE, e1)
        assert np.max(np.abs(row)) < 1e-12


def test_generator_no_growing_modes():
    for e1 in (0.0, 0.5):
        w = np.linalg.eigvals(generator(BASE, e1))
        assert np.max(w.real) < 1e-10


def test_generator_hermiticity_preserving():
    rng = np.random.default_rng(2)
    ell = generator(BASE, 0.2)
    for _ in range(5):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = (a + a.conj().T) / 2
        out = unvec(ell @ vec(rho))
        assert np.max(np.abs(out - out.conj().T)) < 1e-11


def test_qubit_decouples_without_coupling():
    # lam = 0: reduced qubit dynamics is the bare unitary regardless of kappa
    params = ModelParams(e2=0.1, lam=0.0, kappa=0.05, temperature=0.2)
    t = 1.3
    e1 = 0.4
    rho_q = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]], dtype=complex)
    rho_t = np.diag([0.4, 0.6]).astype(complex)
    full = unvec(hilbert.expm(t * generator(params, e1)) @ vec(np.kron(rho_q, rho_t)))
    got = hilbert.partial_trace_tlf(full)
    hq = e1 * hilbert.PAULI["z"] + params.delta * hilbert.PAULI["x"]
    u = hilbert.expm(-1j * t * hq)
    assert np.max(np.abs(got - u @ rho_q @ u.conj().T)) < 1e-8


def test_steady_state_near_gibbs():
    # trace distance of the TLF marginal from the Gibbs state, 1% band
    ell = generator(BASE, 0.0)
    w, v = np.linalg.eig(ell)
    rho_ss = unvec(v[:, np.argmax(w.real)])
    rho_ss = rho_ss / np.trace(rho_ss)
    rho_ss = (rho_ss + rho_ss.conj().T) / 2
    tlf = np.einsum("qtqs->ts", rho_ss.reshape(2, 2, 2, 2))
    z = 1.0 / (1.0 + np.exp(2 * BASE.e2 / BASE.temperature))
    gibbs = np.diag([z, 1.0 - z])
    dist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(tlf - gibbs)))
    assert dist < 0.01


# ---- telegraph-noise analytics ---------------------------------------------


def test_rtn_gamma_value():
    assert abs(rtn_gamma(BASE) - GAMMA_BASE) < 1e-15
    zero = ModelParams(e2=0.1, lam=0.1, kappa=0.0, temperature=0.2)
    assert rtn_gamma(zero) == 0.0


def test_rtn_gamma_high_temperature_limit():
    # coth(x) -> 1/x, so gamma -> 2 kappa T
    params = ModelParams(e2=0.1, lam=0.1, kappa=0.005, temperature=50.0, omega_c=1000.0)
    assert abs(rtn_gamma(params) / (2 * params.kappa * params.temperature) - 1.0) < 1e-4


@pytest.mark.filterwarnings("ignore::tlfgrape.redfield.MotionalNarrowingWarning")
def test_kappa_for_gamma_roundtrip():
    for g in (1e-3, 0.32, 5.0):
        k = kappa_for_gamma(g, BASE)
        back = rtn_gamma(ModelParams(e2=0.1, lam=0.1, kappa=k, temperature=0.2))
        assert abs(back - g) < 1e-12 * g
    assert abs(kappa_for_gamma(0.32, BASE) - 0.32 / (0.2 * COTH_HALF)) < 1e-12


def test_kappa_for_gamma_rejects_nonpositive():
    with pytest.raises(ValueError):
        kappa_for_gamma(0.0, BASE)


def test_rtn_spectrum_values():
    g = rtn_gamma(BASE)
    assert abs(rtn_spectrum(0.0, BASE) - 0.01 / GAMMA_BASE) < 1e-12
    assert abs(rtn_spectrum(g, BASE) - 0.01 / (2 * g)) < 1e-15
    w = 50.0 * g
    assert abs(rtn_spectrum(w, BASE) / (0.01 * g / w**2) - 1.0) < 1e-3
    assert rtn_spectrum(0.3, BASE) == rtn_spectrum(-0.3, BASE)


def test_t1_t2_rates():
    r1, r2 = t1_t2_rates(BASE, 0.0)
    assert abs(r2 - 0.5 * r1) < 1e-18
    # S(2) = 0.01 * gamma / (4 + gamma^2) at the zero-bias splitting
    s2 = 0.01 * GAMMA_BASE / (4.0 + GAMMA_BASE**2)
    assert abs(r1 - s2) < 1e-12 * s2
    assert abs(1.0 / r1 - 1.8485e5) < 0.001e5
    big = t1_t2_rates(BASE, 50.0)[1]
    assert abs(big / rtn_spectrum(0.0, BASE) - 1.0) < 1e-3
