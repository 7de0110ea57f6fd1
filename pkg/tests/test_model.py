import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedpdd.dataset import Encoded, FeatureRecord
from fedpdd.distillation import DistillConfig, combined_terms, soft_target
from fedpdd.errors import ContractError, DomainError, NumericError
from fedpdd.model import (
    AdamState,
    LocalModel,
    ModelConfig,
    adam_step,
    adam_update,
    backward,
    clip_logits,
    forward,
    load_checkpoint,
    raw_logits,
    save_checkpoint,
    snapshot,
)
from fedpdd.protocol import accuracy
from oracles import adam_first_step, central_difference, relative_error


def random_batch(config, n, rng):
    cats = np.stack([rng.integers(0, v, size=n) for v in config.vocab_sizes], axis=1)
    vals = np.ones((n, config.field_count))
    if config.numerical is not None:
        num = np.array(config.numerical)
        vals[:, num] = rng.normal(size=(n, num.sum()))
        cats[:, num] = 0
    return Encoded(np.arange(n), cats, vals, rng.integers(0, config.output_classes, size=n))


def small_config(rng):
    fields = int(rng.integers(2, 5))
    numerical = tuple(bool(x) for x in rng.random(fields) < 0.3)
    vocab = tuple(1 if numerical[f] else int(rng.integers(2, 7)) for f in range(fields))
    return ModelConfig(
        field_count=fields,
        vocab_sizes=vocab,
        embedding_dim=int(rng.integers(1, 5)),
        hidden_widths=tuple(int(h) for h in rng.integers(2, 9, size=rng.integers(1, 3))),
        output_classes=int(rng.integers(2, 4)),
        numerical=numerical,
    )


def perturb_params(model, rng, scale=0.5):
    # move away from the zero/linspace init so every parameter is exercised
    for p in model.params.values():
        p += rng.normal(0.0, scale, size=p.shape)


# ------------------------------------------------------------------ forward


def test_zero_params_give_bias_only():
    cfg = ModelConfig(3, (4, 4, 4), embedding_dim=2, hidden_widths=(5,))
    model = LocalModel(cfg, seed=0)
    for p in model.params.values():
        p[...] = 0.0
    rec = FeatureRecord(0, ((0, 1), (1, 2), (2, 3)), (), 0)
    assert np.array_equal(forward(model, rec), np.zeros(2))
    model.params["head.bias"][...] = [0.3, -0.2]
    assert np.allclose(forward(model, rec), [0.3, -0.2])


def test_clip_to_unit_norm():
    z = np.array([3.0, 4.0])
    out = clip_logits(z, 1.0)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-11)
    assert np.allclose(out, [0.6, 0.8], rtol=1e-11)
    small = np.array([0.1, 0.2])
    assert np.array_equal(clip_logits(small, 1.0), small)


@settings(max_examples=300, deadline=None)
@given(z=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=5),
       c=st.floats(1e-3, 100.0))
def test_released_norm_bounded(z, c):
    assert np.linalg.norm(clip_logits(np.array(z), c)) <= c


def test_released_forward_respects_clip():
    rng = np.random.default_rng(0)
    cfg = ModelConfig(3, (5, 5, 5), embedding_dim=4, hidden_widths=(8,), logit_clip=0.01)
    model = LocalModel(cfg, seed=1)
    perturb_params(model, rng, 2.0)
    rec = FeatureRecord(0, ((0, 1), (1, 2), (2, 3)), (), 0)
    raw = forward(model, rec, release=False)
    assert np.linalg.norm(raw) > 0.01
    assert np.linalg.norm(forward(model, rec)) <= 0.01


def test_fm_pair_order_irrelevant():
    """Pairwise FM term equals the explicit double sum over field pairs in any order."""
    rng = np.random.default_rng(3)
    cfg = ModelConfig(4, (3, 3, 3, 3), embedding_dim=3, hidden_widths=(4,))
    model = LocalModel(cfg, seed=0)
    perturb_params(model, rng)
    batch = random_batch(cfg, 1, rng)
    rows = batch.categories[0] + cfg.offsets
    e = model.params["embedding"][rows]
    pairs = list(itertools.combinations(range(4), 2))
    forward_sum = sum(e[i] @ e[j] for i, j in pairs)
    reverse_sum = sum(e[i] @ e[j] for i, j in reversed(pairs))
    assert forward_sum == pytest.approx(reverse_sum, rel=1e-12)
    # with the MLP head and first-order weights zeroed only the pairwise sum remains
    model.params["head.weight"][...] = 0.0
    model.params["head.bias"][...] = 0.0
    model.params["first_order"][...] = 0.0
    z = raw_logits(model, batch)[0]
    assert np.allclose(z, forward_sum * model.params["fm_proj"], rtol=1e-12)


def test_out_of_range_category():
    cfg = ModelConfig(2, (3, 3), hidden_widths=(4,))
    model = LocalModel(cfg)
    with pytest.raises(DomainError):
        forward(model, FeatureRecord(0, ((0, 3),), (), 0))
    with pytest.raises(DomainError):
        forward(model, FeatureRecord(0, ((5, 1),), (), 0))


def test_init_deterministic():
    cfg = ModelConfig(3, (5, 6, 7))
    a, b = LocalModel(cfg, seed=11), LocalModel(cfg, seed=11)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    c = LocalModel(cfg, seed=12)
    assert not np.array_equal(a.params["embedding"], c.params["embedding"])


@pytest.mark.parametrize("kw", [{"hidden_widths": ()}, {"embedding_dim": 0},
                                {"logit_clip": 0.0}, {"vocab_sizes": (3,)}])
def test_config_validation(kw):
    base = dict(field_count=2, vocab_sizes=(3, 3))
    base.update(kw)
    with pytest.raises((DomainError, ContractError)):
        ModelConfig(**base)


# ----------------------------------------------------------------- backward


def test_zero_upstream_zero_gradient():
    rng = np.random.default_rng(0)
    cfg = ModelConfig(3, (4, 4, 4), embedding_dim=3, hidden_widths=(6,))
    model = LocalModel(cfg, seed=0)
    batch = random_batch(cfg, 5, rng)
    grads = backward(model, batch, np.zeros((5, 2)))
    assert all(not g.any() for g in grads.values())


def test_gradient_linear_in_upstream():
    rng = np.random.default_rng(1)
    cfg = ModelConfig(3, (4, 4, 4), embedding_dim=3, hidden_widths=(6,))
    model = LocalModel(cfg, seed=0)
    perturb_params(model, rng)
    batch = random_batch(cfg, 7, rng)
    up = rng.normal(size=(7, 2))
    g1 = backward(model, batch, up)
    g2 = backward(model, batch, 2 * up)
    for k in g1:
        assert np.allclose(g2[k], 2 * g1[k], rtol=1e-13, atol=0)


def test_backward_shape_contract():
    rng = np.random.default_rng(0)
    cfg = ModelConfig(2, (3, 3), hidden_widths=(4,))
    model = LocalModel(cfg)
    batch = random_batch(cfg, 4, rng)
    with pytest.raises(ContractError):
        backward(model, batch, np.zeros((3, 2)))
    with pytest.raises(ContractError):
        backward(model, batch, np.zeros((4, 3)))


def model_loss_fn(model, batch, teachers, cfg):
    """Batch-mean training objective as a function of one flattened parameter."""

    def at(name):
        def f(x):
            saved = model.params[name]
            model.params[name] = x.reshape(saved.shape)
            try:
                z = raw_logits(model, batch)
            finally:
                model.params[name] = saved
            parts = combined_terms(z, batch.labels, teachers, teachers, cfg)
            return float(parts.total.mean())
        return f

    return at


def check_full_model(seed, n=3):
    rng = np.random.default_rng(seed)
    cfg = small_config(rng)
    model = LocalModel(cfg, seed=seed)
    perturb_params(model, rng)
    batch = random_batch(cfg, n, rng)
    m = cfg.output_classes
    teachers = soft_target(rng.normal(size=(n, m)) * 2, 1.0)
    dcfg = DistillConfig(t_sd=float(rng.uniform(0.5, 5)), t_ed=float(rng.uniform(0.5, 5)),
                         beta=float(rng.uniform(0, 3)), gamma=float(rng.uniform(0, 3)))
    z = raw_logits(model, batch)
    parts = combined_terms(z, batch.labels, teachers, teachers, dcfg)
    grads = backward(model, batch, parts.grad)
    at = model_loss_fn(model, batch, teachers, dcfg)
    worst = 0.0
    for name, value in model.params.items():
        numeric = central_difference(at(name), value.copy(), 1e-5)
        if not numeric.any() and not grads[name].any():
            continue
        worst = max(worst, relative_error(grads[name], numeric))
    return worst


@pytest.mark.parametrize("seed", range(24))
def test_full_model_gradient_matches_finite_differences(seed):
    assert check_full_model(seed) < 1e-4


def test_single_sample_every_parameter():
    """One sample, step 1e-4, every entry of every parameter."""
    rng = np.random.default_rng(99)
    cfg = ModelConfig(3, (5, 5, 5), embedding_dim=4, hidden_widths=(8,))
    model = LocalModel(cfg, seed=0)
    perturb_params(model, rng)
    batch = random_batch(cfg, 1, rng)
    up = rng.normal(size=(1, 2))
    grads = backward(model, batch, up)
    for name, value in model.params.items():
        def f(x, name=name):
            saved = model.params[name]
            model.params[name] = x.reshape(saved.shape)
            try:
                return float((raw_logits(model, batch) * up).sum())
            finally:
                model.params[name] = saved
        numeric = central_difference(f, value.copy(), 1e-4)
        if numeric.any() or grads[name].any():
            assert relative_error(grads[name], numeric) < 1e-4, name


# ---------------------------------------------------------------- optimizer


def test_zero_gradient_no_decay_fixed_point():
    cfg = ModelConfig(2, (3, 3), hidden_widths=(4,))
    model = LocalModel(cfg, seed=0)
    before = {k: v.copy() for k, v in model.params.items()}
    adam_step(model, {k: np.zeros_like(v) for k, v in model.params.items()}, weight_decay=0.0)
    assert all(np.array_equal(before[k], model.params[k]) for k in before)
    assert model.opt.step == 1


def test_first_step_moves_by_lr():
    cfg = ModelConfig(2, (3, 3), hidden_widths=(4,))
    model = LocalModel(cfg, seed=0)
    model.params = {"w": np.array([1.0])}
    model.opt = AdamState.zeros_like(model.params)
    adam_step(model, {"w": np.array([1.0])}, lr=1e-3, weight_decay=0.0)
    expected = adam_first_step(1.0, 1.0, 1e-3, 0.9, 0.999, 1e-8)
    assert model.params["w"][0] == pytest.approx(expected, rel=1e-15)
    assert 1.0 - model.params["w"][0] == pytest.approx(1e-3, rel=1e-4)


def test_decoupled_decay():
    params = {"w": np.array([2.0])}
    state = AdamState.zeros_like(params)
    adam_update(params, {"w": np.array([0.0])}, state, lr=0.1, weight_decay=0.5)
    # decay acts on the parameter directly, the zero gradient adds nothing
    assert params["w"][0] == pytest.approx(2.0 * (1 - 0.05), rel=1e-15)


def test_non_finite_gradient_names_group():
    cfg = ModelConfig(2, (3, 3), hidden_widths=(4,))
    model = LocalModel(cfg, seed=0)
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    grads["head.bias"][0] = np.nan
    with pytest.raises(NumericError, match="head.bias"):
        adam_step(model, grads)
    assert model.opt.step == 0


def test_identical_streams_identical_models():
    rng = np.random.default_rng(5)
    cfg = ModelConfig(3, (4, 4, 4), hidden_widths=(6,))
    a, b = LocalModel(cfg, seed=2), LocalModel(cfg, seed=2)
    for _ in range(5):
        batch = random_batch(cfg, 8, rng)
        up = rng.normal(size=(8, 2))
        adam_step(a, backward(a, batch, up))
        adam_step(b, backward(b, batch, up))
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


# ----------------------------------------------------------------- snapshot


def test_snapshot_isolated_from_training():
    rng = np.random.default_rng(0)
    cfg = ModelConfig(3, (4, 4, 4), hidden_widths=(6,))
    model = LocalModel(cfg, seed=0)
    batch = random_batch(cfg, 16, rng)
    snap = snapshot(model, 0, 0.5)
    before = raw_logits(snap, batch)
    assert np.array_equal(before, raw_logits(model, batch))
    assert np.array_equal(raw_logits(snap.as_model(), batch), before)
    for _ in range(10):
        adam_step(model, backward(model, batch, rng.normal(size=(16, 2))), lr=0.05)
    assert np.array_equal(raw_logits(snap, batch), before)
    assert not np.array_equal(raw_logits(model, batch), before)
    with pytest.raises(ValueError):
        snap.params["head.bias"][0] = 1.0
    with pytest.raises(TypeError):
        snap.params["head.bias"] = np.zeros(2)


def test_untrained_snapshot_near_chance():
    rng = np.random.default_rng(0)
    cfg = ModelConfig(3, (20, 20, 20), hidden_widths=(8,))
    batch = random_batch(cfg, 4000, rng)
    acc = accuracy(snapshot(LocalModel(cfg, seed=0), 0, 0.0), batch)
    assert abs(acc - 0.5) < 0.1


# --------------------------------------------------------------- checkpoint


def test_checkpoint_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    cfg = ModelConfig(3, (4, 1, 6), numerical=(False, True, False), hidden_widths=(5, 3),
                      output_classes=3, logit_clip=2.5)
    model = LocalModel(cfg, seed=4)
    perturb_params(model, rng)
    path = tmp_path / "m.npz"
    save_checkpoint(model, path, tag=3, score=0.75)
    back = load_checkpoint(path)
    assert back.config == cfg
    assert set(back.params) == set(model.params)
    for k in model.params:
        assert back.params[k].dtype == np.float64
        assert back.params[k].tobytes() == model.params[k].tobytes()


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.npz"
    np.savez(path, header=np.array('{"format": "other", "version": 1}'))
    with pytest.raises(ContractError):
        load_checkpoint(path)
