import numpy as np
import pytest
import torch

from makeupnet.checkpoint import (
    CheckpointError,
    build_generator_from,
    load_checkpoint,
    save_checkpoint,
)
from makeupnet.data import MakeupDataset, PairSample
from makeupnet.discriminator import DiscriminatorSet
from makeupnet.generator import GeneratorConfig, MakeupTransferNet
from makeupnet.tensors import seed_all
from makeupnet.train import NonFiniteLossError, TrainConfig, Trainer

from synthfaces import synthetic_face, write_fixture_dataset


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("tinyset")
    write_fixture_dataset(root, n_pairs=2, size=32, seed=5)
    return MakeupDataset(root, size=32)


def _small_trainer(dataset, seed=0, **cfg_kw):
    config = TrainConfig(total_steps=cfg_kw.pop("total_steps", 10),
                         checkpoint_every=0, image_size=32, seed=seed, **cfg_kw)
    seed_all(seed)
    gen = MakeupTransferNet(GeneratorConfig())
    d_set = DiscriminatorSet(base_channels=16)
    return Trainer(dataset, gen, d_set, config)


def _params_vector(module):
    return torch.cat([p.detach().reshape(-1).clone() for p in module.parameters()])


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=2)
    with pytest.raises(ValueError):
        TrainConfig(image_size=30)
    with pytest.raises(ValueError):
        TrainConfig(total_steps=0)
    assert TrainConfig().learning_rate == 1e-4
    assert TrainConfig().adam_betas == (0.5, 0.999)


def test_default_run_length_is_epochs_over_makeup_pool(tiny_dataset):
    from makeupnet.train import DEFAULT_EPOCHS

    config = TrainConfig(checkpoint_every=0, image_size=32, seed=0)
    seed_all(0)
    trainer = Trainer(tiny_dataset, MakeupTransferNet(GeneratorConfig()),
                      DiscriminatorSet(base_channels=16), config)
    assert trainer.config.total_steps == DEFAULT_EPOCHS * len(tiny_dataset.makeup_ids)


def test_deterministic_loss_sequences(tiny_dataset):
    runs = []
    for _ in range(2):
        trainer = _small_trainer(tiny_dataset, seed=3)
        reports = trainer.run(total_steps=3)
        runs.append([r.as_dict() for r in reports])
    assert runs[0] == runs[1]


def test_optimizers_partition_parameters(tiny_dataset):
    trainer = _small_trainer(tiny_dataset, seed=1)
    g_params = {id(p) for group in trainer.g_opt.param_groups for p in group["params"]}
    d_params = {id(p) for group in trainer.d_opt.param_groups for p in group["params"]}
    assert not g_params & d_params
    all_model_params = {id(p) for p in trainer.generator.parameters()}
    all_model_params |= {id(p) for p in trainer.d_set.parameters()}
    assert g_params | d_params == all_model_params


def test_discriminator_update_leaves_generator_untouched(tiny_dataset):
    trainer = _small_trainer(tiny_dataset, seed=2)
    data = trainer.materialize(trainer.pair_for_step(0))
    g_before = _params_vector(trainer.generator)
    # run the discriminator phase only: fakes detached, then one d_opt step
    from makeupnet.losses import discriminator_adversarial_loss

    out_fwd = trainer.generator(data.source, data.reference,
                                data.source_masks, data.reference_masks)
    d_loss, _ = discriminator_adversarial_loss(
        trainer.d_set,
        reals=[(data.source, data.adv_source_masks)],
        fakes=[(out_fwd.detach(), data.adv_source_masks)])
    trainer.d_opt.zero_grad()
    d_loss.backward()
    trainer.d_opt.step()
    assert torch.equal(g_before, _params_vector(trainer.generator))
    assert all(p.grad is None or p.grad.abs().sum() == 0
               for p in trainer.generator.parameters())


def test_losses_finite_and_total_recomposes(tiny_dataset):
    trainer = _small_trainer(tiny_dataset, seed=4)
    reports = trainer.run(total_steps=2)
    assert len(reports) == 2
    for r in reports:
        vals = r.as_dict()
        assert all(np.isfinite(v) for v in vals.values())
        assert abs(r.total_g - r.recompose()) <= 1e-6 * max(1.0, abs(r.total_g))


def test_nonfinite_step_aborts_and_rolls_back(tiny_dataset):
    trainer = _small_trainer(tiny_dataset, seed=6)
    data = trainer.materialize(trainer.pair_for_step(0))
    data.source[0, 0, 0, 0] = float("nan")
    g_before = _params_vector(trainer.generator)
    d_before = _params_vector(trainer.d_set)
    with pytest.raises(NonFiniteLossError):
        trainer.train_step(data)
    assert torch.equal(g_before, _params_vector(trainer.generator))
    assert torch.equal(d_before, _params_vector(trainer.d_set))


def test_run_logs_incident_and_continues(tiny_dataset, tmp_path):
    log_path = tmp_path / "train.log"
    trainer = _small_trainer(tiny_dataset, seed=7)
    trainer._log_fh = open(log_path, "a")

    sane_pair = trainer.pair_for_step(0)

    class Poisoned:
        def __init__(self):
            self.calls = 0

        def sample_pair(self, rng_seed):
            self.calls += 1
            if self.calls == 1:
                bad = PairSample(
                    sane_pair.source * np.nan, sane_pair.reference,
                    sane_pair.source_parsing, sane_pair.reference_parsing)
                return bad
            return sane_pair

    trainer.dataset = Poisoned()
    reports = trainer.run(total_steps=2)
    assert len(reports) == 1  # first step aborted, second accepted
    text = log_path.read_text()
    assert "incident=aborted" in text


def test_checkpoint_roundtrip_byte_identical(tiny_dataset, tmp_path):
    trainer = _small_trainer(tiny_dataset, seed=8)
    trainer.run(total_steps=1)  # populate optimizer moments
    p1, p2 = tmp_path / "a.pt", tmp_path / "b.pt"
    trainer.save(p1)
    fresh = _small_trainer(tiny_dataset, seed=9)
    fresh.load(p1)
    fresh.save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_resume_equivalence(tiny_dataset, tmp_path):
    ckpt = tmp_path / "resume.pt"
    # uninterrupted run: 3 steps
    a = _small_trainer(tiny_dataset, seed=10)
    reports_a = a.run(total_steps=3)
    # interrupted run: 2 steps, save, reload into a fresh trainer, 1 more
    b = _small_trainer(tiny_dataset, seed=10)
    b.run(total_steps=2)
    b.save(ckpt)
    c = _small_trainer(tiny_dataset, seed=10)
    c.load(ckpt)
    assert c.step == 2
    reports_c = c.run(total_steps=3)
    assert len(reports_c) == 1
    assert reports_a[2].as_dict() == reports_c[0].as_dict()


def test_inference_only_load(tiny_dataset, tmp_path):
    trainer = _small_trainer(tiny_dataset, seed=11)
    path = tmp_path / "gen_only.pt"
    save_checkpoint(path, trainer.generator, step=0,
                    train_meta={"image_size": 32})
    payload = load_checkpoint(path)
    assert "discriminators" not in payload
    net = build_generator_from(payload)
    src, src_par = synthetic_face(0, 32)
    ref, ref_par = synthetic_face(1, 32)
    from makeupnet.generator import TransferRequest

    out = net.transfer(TransferRequest(src, ref, src_par, ref_par))
    assert out.shape == (32, 32, 3)


def test_checkpoint_version_and_config_mismatch(tiny_dataset, tmp_path):
    trainer = _small_trainer(tiny_dataset, seed=12)
    path = tmp_path / "v.pt"
    trainer.save(path)
    payload = load_checkpoint(path)
    # version mismatch
    bad = dict(payload)
    bad["version"] = 999
    torch.save(bad, tmp_path / "bad.pt")
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(tmp_path / "bad.pt")
    # config mismatch on restore
    from makeupnet.checkpoint import restore_generator

    other = MakeupTransferNet(GeneratorConfig(transfer_order=("eyes", "lips", "skin")))
    with pytest.raises(CheckpointError, match="config"):
        restore_generator(other, payload)
    # corrupt archive
    (tmp_path / "junk.pt").write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError, match="corrupt"):
        load_checkpoint(tmp_path / "junk.pt")
