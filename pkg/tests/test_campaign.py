"""Campaign lifecycle: ask/tell discipline, persistence, replay."""

import json

import numpy as np
import pytest

from bfosp.acquisition import AcquisitionConfig
from bfosp.bernstein import RescaleRecord, ShapeKind, ShapePrior
from bfosp.campaign import (
    Campaign,
    ask,
    init,
    iterations_to_reach,
    load_state,
    run_synthetic,
    save_state,
    status,
    tell,
)
from bfosp.errors import ConfigError, ProtocolError, StateError
from bfosp.optimizer import OptimizerConfig


def quick_config(batch_size=1, **overrides):
    defaults = dict(
        prior=ShapePrior(ShapeKind.INCREASING),
        start_order=5,
        max_order=10,
        acquisition=AcquisitionConfig(
            candidate_count=120, refine_steps=3, batch_size=batch_size
        ),
    )
    defaults.update(overrides)
    return OptimizerConfig(**defaults)


def score_all(pending, value=None):
    rng = np.random.default_rng(0)
    return {
        p.token: (value if value is not None else float(rng.random())) for p in pending
    }


# ---------------------------------------------------------------------------
# Ask / tell discipline
# ---------------------------------------------------------------------------


def test_ask_is_idempotent_until_told():
    state = init(quick_config(batch_size=3), seed=5)
    state, first = ask(state)
    state, second = ask(state)
    assert first == second
    assert [p.token for p in first] == [p.token for p in second]


def test_ask_batch_of_six_monotone_curves():
    state = init(quick_config(batch_size=6), seed=1)
    state, pending = ask(state)
    assert len(pending) == 6
    for p in pending:
        assert all(b >= a - 1e-12 for a, b in zip(p.point.alpha, p.point.alpha[1:]))


def test_tell_advances_and_renews_pending():
    state = init(quick_config(), seed=2)
    state, pending = ask(state)
    told = tell(state, score_all(pending, 0.4))
    assert told.iterations_completed == 1
    assert len(told.observations) == 1
    assert told.pending and told.pending[0].token != pending[0].token
    assert told.log[-1].incumbent_value == pytest.approx(0.4)


def test_tell_rejects_unknown_and_partial_tokens():
    state = init(quick_config(batch_size=2), seed=3)
    state, pending = ask(state)
    with pytest.raises(ProtocolError):
        tell(state, {"bogus": 1.0})
    with pytest.raises(ProtocolError):
        tell(state, {pending[0].token: 1.0})  # missing the second token
    extra = dict(score_all(pending, 1.0))
    extra["stray"] = 2.0
    with pytest.raises(ProtocolError):
        tell(state, extra)
    # failed tells leave the state untouched
    assert state.iterations_completed == 0 and len(state.pending) == 2


def test_tell_before_ask_rejected():
    state = init(quick_config(), seed=4)
    with pytest.raises(ProtocolError):
        tell(state, {"anything": 1.0})


def test_retrying_last_tell_is_noop():
    state = init(quick_config(), seed=5)
    state, pending = ask(state)
    scores = score_all(pending, 0.7)
    told = tell(state, scores)
    again = tell(told, scores)  # network retry after a lost response
    assert again is told
    # but replaying with a different value is an error
    with pytest.raises(ProtocolError):
        tell(told, {next(iter(scores)): 0.9})


def test_negate_flag_flips_stored_sign():
    state = init(quick_config(negate=True), seed=6)
    state, pending = ask(state)
    told = tell(state, score_all(pending, 0.25))  # e.g. a validation error
    assert told.observations[0].value == pytest.approx(-0.25)
    assert status(told)["incumbent"]["value"] == pytest.approx(0.25)


# ---------------------------------------------------------------------------
# Status and curve export
# ---------------------------------------------------------------------------


def test_status_summary_fields():
    state = init(quick_config(batch_size=2), seed=7)
    summary = status(state)
    assert summary["incumbent"] is None
    assert summary["pending_tokens"] == []
    state, pending = ask(state)
    told = tell(state, score_all(pending, 0.5))
    summary = status(told)
    assert summary["iterations_completed"] == 1
    assert summary["observation_count"] == 2
    assert summary["incumbent"]["value"] == pytest.approx(0.5)
    assert len(summary["pending_tokens"]) == 2


def test_export_curve_rescales_to_application_units():
    config = quick_config(rescale=RescaleRecord(0.0, 60.0, 5.0, 25.0))
    state = init(config, seed=8)
    state, pending = ask(state)
    told = tell(state, score_all(pending, 0.9))
    from bfosp.campaign import export_curve

    curve = export_curve(told, "incumbent", grid_size=101)
    assert len(curve["grid"]) == 101
    assert curve["grid"][0] == 0.0 and curve["grid"][-1] == 60.0
    assert min(curve["values"]) >= 5.0 - 1e-9
    assert max(curve["values"]) <= 25.0 + 1e-9
    suggestion = export_curve(told, "suggestion", grid_size=11)
    assert len(suggestion["values"]) == 11
    with pytest.raises(ConfigError):
        export_curve(told, "somethingelse")


def test_export_curve_needs_data():
    from bfosp.campaign import export_curve

    state = init(quick_config(), seed=9)
    with pytest.raises(StateError):
        export_curve(state, "incumbent")
    with pytest.raises(StateError):
        export_curve(state, "suggestion")


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    state = init(quick_config(batch_size=2), seed=10)
    state, pending = ask(state)
    state = tell(state, score_all(pending, 0.3))
    path = tmp_path / "c.json"
    save_state(state, path)
    loaded = load_state(path)
    assert loaded == state
    assert not list(tmp_path.glob("*.tmp"))


def test_load_rejects_corrupt_documents(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(StateError, match="not valid JSON"):
        load_state(path)
    path.write_text(json.dumps({"schema_version": 1}))
    with pytest.raises(StateError, match="missing keys"):
        load_state(path)
    state = init(quick_config(), seed=11)
    doc = state.to_json()
    doc["schema_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(StateError, match="schema_version"):
        load_state(path)
    with pytest.raises(StateError):
        load_state(tmp_path / "never-written.json")


def test_campaign_wrapper_persists_every_mutation(tmp_path):
    path = tmp_path / "c.json"
    campaign = Campaign.create(quick_config(batch_size=2), path=path, seed=12)
    requests = campaign.ask()
    assert path.exists()
    on_disk = load_state(path)
    assert [p.token for p in on_disk.pending] == [r["token"] for r in requests]
    campaign.tell({r["token"]: 0.5 for r in requests})
    on_disk = load_state(path)
    assert on_disk.iterations_completed == 1
    log_lines = (tmp_path / "c.log.jsonl").read_text().strip().splitlines()
    assert len(log_lines) == 1
    assert json.loads(log_lines[0])["iteration"] == 1


def test_reload_produces_identical_next_ask(tmp_path):
    # Kill-and-replay: a process restarted from the file must issue the very
    # same batch as the uninterrupted one.
    for seed in range(5):
        path = tmp_path / f"c{seed}.json"
        live = Campaign.create(quick_config(), path=path, seed=seed)
        for _ in range(3):
            snapshot = load_state(path)
            requests = live.ask()
            replayed = Campaign(snapshot, path=None)
            replayed_requests = replayed.ask()
            assert replayed_requests == requests
            scores = {r["token"]: float(np.mean(r["curve"]["values"])) for r in requests}
            live.tell(scores)
            replayed.tell(scores)
            assert replayed.state.to_json() == live.state.to_json()


# ---------------------------------------------------------------------------
# Synthetic driver
# ---------------------------------------------------------------------------


def test_run_synthetic_smoke():
    result = run_synthetic("decreasing", iterations=3, seed=0)
    assert len(result["incumbents"]) == 3
    assert result["final_order"] == 5  # no trigger expected this early
    inc = result["incumbents"]
    assert all(b >= a for a, b in zip(inc, inc[1:]))
    assert result["prior"] == "decreasing"


def test_run_synthetic_prior_override_and_persistence(tmp_path):
    path = tmp_path / "s.json"
    result = run_synthetic(
        "decreasing", iterations=2, seed=1, prior_kind="range_only", path=path
    )
    assert result["prior"] == "range_only"
    assert load_state(path).iterations_completed == 2


def test_iterations_to_reach():
    assert iterations_to_reach([0.1, 0.5, 0.8], 0.6) == 3
    assert iterations_to_reach([0.7], 0.6) == 1
    assert iterations_to_reach([0.1, 0.2], 0.6) is None


def test_iteration_budget_is_enforced():
    state = init(quick_config(max_iterations=2), seed=13)
    for _ in range(2):
        state, pending = ask(state)
        state = tell(state, score_all(pending, 0.5))
    assert state.pending == ()  # no batch generated past the budget
    assert status(state)["done"]
    with pytest.raises(ProtocolError, match="budget"):
        ask(state)


def test_run_log_triggers_are_consistent():
    # every order increment carries exactly one reason; order never falls
    # and never passes the cap
    result = run_synthetic("decreasing", iterations=12, seed=4)
    orders = [5] + [r["order_after"] for r in result["records"]]
    assert all(b in (a, a + 1) for a, b in zip(orders, orders[1:]))
    assert max(orders) <= 10
    for r in result["records"]:
        if r["order_after"] > r["order_before"]:
            assert r["trigger"] in ("derivative", "schedule")
        else:
            assert r["trigger"] == "none"
