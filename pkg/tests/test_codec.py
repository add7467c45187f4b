import math

import numpy as np
import pytest
from sklearn.base import clone

from covertsim import ParameterError
from covertsim.codec import (
    Codebook,
    MLTimingDecoder,
    capacity,
    chernoff_event_bound,
    codebook_size,
    decode_ml,
    generate_codebook,
    plan_phases,
    predict_failure,
    read_codebook,
    run_scenario2,
    run_scenario2_trials,
    transmit,
    write_codebook,
)
from covertsim.params import ChannelParams
from covertsim.point_process import PacketTrace, sample_interarrival, trial_rng
from covertsim.queue import serve
from covertsim.walk import simulate_survival
from oracles import erf_series, erfinv_bisect, poisson_chi2_pvalue


# -- closed forms


def test_capacity_examples():
    assert capacity(3.0, 3.0) == 0.0
    assert capacity(1.0, math.e) == 1.0
    assert capacity(1.0, 2.0) == pytest.approx(0.693147181, abs=1e-9)
    with pytest.raises(ParameterError):
        capacity(2.0, 1.0)


def test_codebook_size_examples():
    assert codebook_size(2.0, 10.0, 0.5, 2.0) == (0.0, 1.0)
    size = codebook_size(1.0, 1000.0, 0.995, math.e)
    assert size.log_m == pytest.approx(5.0, rel=1e-9)
    assert size.m == pytest.approx(148.413159, rel=1e-6)
    assert codebook_size(1.0, 1e6, 0.5, 10.0).m is None


@pytest.mark.parametrize("rate,mu,psi", [(1, 2, 0.5), (20, 80, 0.99482), (0.3, 7, 0.1)])
@pytest.mark.parametrize("T", [10.0, 250.0, 4000.0])
def test_codebook_size_linear_in_horizon(rate, mu, psi, T):
    one = codebook_size(rate, T, psi, mu).log_m
    assert codebook_size(rate, 2 * T, psi, mu).log_m == pytest.approx(2 * one, rel=1e-12)
    assert one == pytest.approx((1 - psi) * T * rate * math.log(mu / rate), rel=1e-12)


def test_predict_failure_examples():
    assert predict_failure(0, 10) == 1.0
    assert predict_failure(20, 400) == pytest.approx(1 - erf_series(20 / math.sqrt(800)), abs=1e-12)
    assert predict_failure(20, 400) == pytest.approx(0.31731, abs=1e-5)
    assert predict_failure(1e4, 10) == 0.0
    with pytest.raises(ParameterError):
        predict_failure(1, 0.5)


def test_chernoff_examples():
    assert chernoff_event_bound(1.0, 5.0) == pytest.approx((math.e / 4) ** 10)
    assert chernoff_event_bound(1.0, 5.0) == pytest.approx(0.021006, abs=1e-6)
    assert chernoff_event_bound(1.0, 1e4) == 0.0


def test_chernoff_bound_holds_empirically():
    rng = trial_rng(1)
    k = rng.poisson(10.0, 1_000_000)
    assert np.mean(k >= 20) <= chernoff_event_bound(5.0, 1.0)


def test_plan_phases_example():
    plan = plan_phases(0.2, 0.1)
    inv = erfinv_bisect(0.95)
    assert inv == pytest.approx(1.38590, abs=1e-5)
    assert plan.ratio == pytest.approx((2 / 0.2 * inv) ** 2, rel=1e-9)
    assert plan.ratio == pytest.approx(192.07, abs=0.01)
    assert plan.psi == pytest.approx(0.99482, abs=1e-5)
    scaled = plan_phases(0.2, 0.1, horizon=2000.0)
    assert scaled.buffer_window + scaled.transmit_window == pytest.approx(2000.0)


def test_plan_phases_limits():
    high = plan_phases(0.2, 1 - 1e-12)
    assert high.ratio == pytest.approx((2 / 0.2 * erfinv_bisect(0.5)) ** 2, rel=1e-6)
    assert plan_phases(1e-6, 0.1).psi > 1 - 1e-9
    with pytest.raises(ParameterError):
        plan_phases(0.2, 0.0)


# -- codebook


def test_codebook_counts_and_determinism():
    book = generate_codebook(10_000, 2.0, 5.0, seed=3)
    assert len(book) == 10_000
    assert poisson_chi2_pvalue([len(w) for w in book.codewords], 10.0) > 0.01
    again = generate_codebook(10_000, 2.0, 5.0, seed=3)
    assert all(a == b for a, b in zip(book.codewords, again.codewords))
    assert generate_codebook(1, 2.0, 5.0, seed=3)[0] == book[0]


def test_codebook_file_round_trip(tmp_path):
    book = generate_codebook(5, 3.0, 4.0, seed=11)
    path = tmp_path / "book.txt"
    write_codebook(book, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "M=5 lambda=3 window=4 seed=11"
    back = read_codebook(path)
    assert (len(back), back.rate, back.window, back.seed) == (5, 3.0, 4.0, 11)
    for a, b in zip(book.codewords, back.codewords):
        np.testing.assert_allclose(a.times, b.times, rtol=1e-8)


def test_read_codebook_rejects_bad_files(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("M=3 lambda=1\n")
    with pytest.raises(ParameterError):
        read_codebook(path)
    path.write_text("M=3 lambda=1 window=2 seed=0\n0.5\n")
    with pytest.raises(ParameterError):
        read_codebook(path)


# -- transmission


def test_large_buffer_never_fails():
    word = sample_interarrival(2.0, 10.0, 5)
    out = transmit(word, len(word) + 1, PacketTrace.empty(20.0), 10.0)
    assert not out.failure
    assert len(out.released) == len(word)
    np.testing.assert_allclose(out.released.times, 10.0 + word.times)
    assert out.buffer_min == 1
    assert out.final_occupancy == 1


def test_empty_buffer_fails_before_first_arrival():
    word = PacketTrace([0.5, 1.0], 2.0)
    jack = PacketTrace([3.0], 4.0)  # arrives after the first release at 2.5
    out = transmit(word, 0, jack, 2.0)
    assert out.failure and out.buffer_min == 0
    assert len(out.released) == 0


def test_arrival_replenishes_buffer():
    word = PacketTrace([0.5, 1.0], 2.0)
    jack = PacketTrace([1.0, 2.2], 4.0)  # only 2.2 falls after the phase offset 2.0
    out = transmit(word, 1, jack, 2.0)
    assert not out.failure
    assert out.buffer_min == 0
    assert out.final_occupancy == 0


def test_buffer_conservation():
    for i in range(50):
        rng = trial_rng(12, i)
        word = sample_interarrival(3.0, 20.0, rng)
        jack = sample_interarrival(3.0, 40.0, rng)
        m = int(rng.integers(0, 15))
        out = transmit(word, m, jack, 20.0)
        arrived = np.count_nonzero(jack.times > 20.0)
        assert m + arrived == len(out.released) + out.final_occupancy
        assert out.failure == (len(out.released) < len(word))


# -- decoding


def test_noiseless_decoding():
    book = generate_codebook(8, 1.0, 30.0, seed=2)
    for sent in range(8):
        released = PacketTrace(5.0 + book[sent].times, 35.0)
        departures = serve(released, 1e7, trial_rng(3, sent)).departures
        assert decode_ml(departures, book, 1e7, 5.0) == sent


def test_tie_goes_to_lowest_index():
    word = PacketTrace([0.2, 0.7], 1.0)
    book = Codebook((word, word), 1.0, 1.0, 0)
    assert decode_ml(PacketTrace([0.3, 0.9], 2.0), book, 2.0, 0.0) == 0


def test_no_feasible_codeword():
    book = Codebook((PacketTrace([0.2, 0.7], 1.0),), 1.0, 1.0, 0)
    assert decode_ml(PacketTrace([0.5], 2.0), book, 2.0, 0.0) is None
    assert decode_ml(PacketTrace([0.1, 0.8], 2.0), book, 2.0, 0.0) is None
    with pytest.raises(ParameterError):
        decode_ml(PacketTrace([0.5], 2.0), Codebook((), 1.0, 1.0, 0), 2.0, 0.0)


def test_block_error_rate_below_capacity():
    M, rate, window, mu = 16, 1.0, 30.0, 8.0
    trials = 1000
    errors = 0
    for i in range(trials):
        rng = trial_rng(4, i)
        book = generate_codebook(M, rate, window, int(rng.integers(2**63)))
        sent = int(rng.integers(M))
        departures = serve(book[sent], mu, rng).departures
        errors += decode_ml(departures, book, mu, 0.0) != sent
    assert errors / trials < 0.05


def test_decoder_estimator():
    book = generate_codebook(4, 1.0, 10.0, seed=5)
    dec = MLTimingDecoder(service_rate=50.0, phase_offset=0.0)
    assert dec.get_params() == {"phase_offset": 0.0, "service_rate": 50.0}
    assert clone(dec).get_params() == dec.get_params()
    dec.fit(book)
    obs = [serve(book[j], 50.0, trial_rng(6, j)).departures for j in range(4)]
    obs.append(PacketTrace(np.arange(1, 60) * 0.1, 10.0))
    pred = dec.predict(obs)
    assert pred[-1] == -1
    assert dec.decision_function(obs).shape == (5, 4)
    with pytest.raises(ParameterError):
        MLTimingDecoder().fit([book[0]])


# -- walk model of failure


def test_failure_nondecreasing_in_phase_length():
    rates = [simulate_survival(10, k, 50_000, seed=k).failure_rate for k in (50, 100, 200, 400)]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


# -- end to end


def test_scenario2_requires_queue():
    with pytest.raises(ParameterError):
        run_scenario2(ChannelParams(20.0, 2000.0, 0.2), 4, 0)
    with pytest.raises(ParameterError):
        run_scenario2(ChannelParams(20.0, 2000.0, 0.2, mu=10.0), 4, 0)


def test_scenario2_record():
    params = ChannelParams(20.0, 2000.0, 0.2, 0.1, mu=80.0)
    rec = run_scenario2(params, 8, trial_rng(7))
    assert rec.released.horizon == 2000.0
    assert len(rec.released) == rec.observed_count
    assert np.all(np.diff(rec.released.times) > 0)
    assert rec.m_planned == pytest.approx(0.2 * math.sqrt(40 * plan_phases(0.2, 0.1, 2000).buffer_window))
    assert 0 <= rec.sent_index < 8
    assert rec.decode_error == (rec.decoded_index != rec.sent_index)
    same = run_scenario2(params, 8, trial_rng(7))
    assert same.released == rec.released and same.decoded_index == rec.decoded_index


def test_scenario2_small_run():
    params = ChannelParams(20.0, 2000.0, 0.2, 0.1, mu=80.0)
    summary = run_scenario2_trials(params, 16, 200, seed=8)
    assert summary.psi == pytest.approx(0.99482, abs=1e-5)
    assert summary.failure_rate < 0.1
    assert summary.decode_error_rate < 0.05
    assert abs(summary.m_mean - summary.m_planned) < 5
    again = run_scenario2_trials(params, 16, 200, seed=8, threads=3)
    assert again.failure_rate == summary.failure_rate
    assert np.array_equal(again.phase2_counts, summary.phase2_counts)


def test_noiseless_end_to_end():
    params = ChannelParams(1.0, 6000.0, 0.2, 0.1, mu=1000.0)
    summary = run_scenario2_trials(params, 64, 1000, seed=9)
    assert summary.decode_error_rate == summary.failure_rate
