"""Deterministic training loops for every stage, dataset assembly, evaluation.

Every loop is a pure function of (config, seeds, input records): batches,
masks, flow times and noise all come from stage-tagged numpy generators, and
model initialization comes from the torch seed pinned in seed_all. Loss
records stream to JSON-lines logs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

from .config import RunConfig
from .dataset import (
    DatasetSplit,
    MotionRecord,
    filter_by_length,
    generate_synthetic_species,
    generate_toy_dataset,
    make_splits,
    train_norm_stats,
)
from .features import NormStats, denormalize, normalize
from .generator import (
    GenerationResult,
    MaskedMotionGenerator,
    PipelineBundle,
    flatten_tpose,
    gen_total_loss,
    generate_motion,
    sample_training_mask,
)
from .matcher import ToyMatcher, contrastive_loss
from .metrics import diversity, fid, mm_dist, mme, r_precision
from .morph_critic import MorphologyCritic, pretrain_loss
from .motion_ae import (
    MotionAutoencoder,
    ae_loss,
    bone_index_tensors,
    pad_batch,
    stats_tensors,
)
from .optim import AdamConfig, AdamState, init_adam_state, sgd_backward_step, seed_all
from .providers import EmbeddingProvider, HashingProvider
from .skeleton import SkeletonTopology, canonical_topology, forward_kinematics_tpose
from .tpose_vae import TPoseVae

_STAGE_SEEDS = {"tpose": 101, "ae": 202, "critic": 303, "gen": 404, "matcher": 505}


def _f(t: torch.Tensor) -> float:
    return float(t.detach())


class JsonlLogger:
    """Append-only JSON-lines metrics log; a None path disables it."""

    def __init__(self, path=None):
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def log(self, **row) -> None:
        if self._fh is not None:
            self._fh.write(json.dumps(row, sort_keys=True) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


def _stage_rng(seed: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, _STAGE_SEEDS[stage]]))


@dataclass
class PreparedData:
    records: list[MotionRecord]
    split: DatasetSplit
    stats: NormStats | None  # None when feature normalization is disabled
    container_stats: NormStats
    topo: SkeletonTopology
    holdout_species: set[str]
    norm_seqs: list[np.ndarray]  # float32, normalized when stats is set


def default_holdout(cfg: RunConfig) -> set[str]:
    """The last holdout_count species of the deterministic species list."""
    species = generate_synthetic_species(cfg.seed, cfg.species_count)
    if cfg.holdout_count <= 0:
        return set()
    return {name for name, _ in species[-cfg.holdout_count :]}


def build_dataset(cfg: RunConfig) -> tuple[list[MotionRecord], DatasetSplit, NormStats, SkeletonTopology, set[str]]:
    topo = canonical_topology()
    records = filter_by_length(generate_toy_dataset(cfg.seed, cfg.species_count, cfg.records_per_combo))
    holdout = default_holdout(cfg)
    split = make_splits(records, holdout, cfg.split_seed)
    stats = train_norm_stats(records, split)
    return records, split, stats, topo, holdout


def prepare_data(cfg: RunConfig, records, split, stats, topo, holdout) -> PreparedData:
    use_stats = stats if cfg.normalize_features else None
    if use_stats is not None:
        seqs = [normalize(r.motion.astype(np.float64), use_stats).astype(np.float32) for r in records]
    else:
        seqs = [r.motion.astype(np.float32) for r in records]
    return PreparedData(
        records=records,
        split=split,
        stats=use_stats,
        container_stats=stats,
        topo=topo,
        holdout_species=holdout,
        norm_seqs=seqs,
    )


def species_table(records: list[MotionRecord], ids: list[int]) -> dict[str, np.ndarray]:
    """species name -> canonical bone lengths, from the given record ids."""
    table: dict[str, np.ndarray] = {}
    for i in ids:
        table.setdefault(records[i].species_name, records[i].tpose_bone_lengths)
    return table


# --------------------------------------------------------------------------
# stage 1a: T-pose prior


def train_tpose_vae(data: PreparedData, provider: EmbeddingProvider, cfg: RunConfig,
                    seed: int | None = None, steps: int | None = None,
                    log: JsonlLogger | None = None) -> tuple[TPoseVae, AdamState, list[dict]]:
    seed = cfg.seed if seed is None else seed
    steps = cfg.tpose_steps if steps is None else steps
    seed_all(seed + _STAGE_SEEDS["tpose"])
    log = log or JsonlLogger()

    table = species_table(data.records, data.split.train)
    names = sorted(table)
    bones = torch.tensor(np.stack([table[n] for n in names]), dtype=torch.float32)
    conds = torch.tensor(
        np.stack([provider.species_embed(n).vector for n in names]), dtype=torch.float32
    )

    model = TPoseVae(data.topo, cond_dim=cfg.cond_dim, hidden=cfg.tpose_hidden,
                     latent_dim=cfg.pose_latent_dim)
    state = init_adam_state(dict(model.named_parameters()))
    adam = AdamConfig(lr=cfg.tpose_lr)
    rng = _stage_rng(seed, "tpose")
    history = []
    for step in range(1, steps + 1):
        if len(names) > cfg.tpose_batch:
            idx = rng.choice(len(names), size=cfg.tpose_batch, replace=False)
            b, c = bones[idx], conds[idx]
        else:
            b, c = bones, conds
        noise = torch.tensor(rng.standard_normal((b.shape[0], cfg.pose_latent_dim)),
                             dtype=torch.float32)
        total, recon, kl = model.loss(b, c, noise, cfg.kl_weight)
        if not torch.isfinite(total):
            raise FloatingPointError(f"non-finite loss at tpose step {step}")
        state = sgd_backward_step(model, total, state, adam)
        if step == 1 or step == steps or step % 100 == 0:
            row = {"step": step, "total": _f(total), "recon": _f(recon), "kl": _f(kl)}
            history.append(row)
            log.log(stage="tpose", **row)
    return model, state, history


# --------------------------------------------------------------------------
# stage 1b: motion autoencoder


def ae_train_step(model, x, frame_mask, state, adam, bone_idx, stats_t, morph_weight):
    z = model.encode(x)
    x_hat = model.decode(z, x.shape[1])
    total, mse, morph = ae_loss(x, x_hat, bone_idx, stats_t, morph_weight, frame_mask)
    if not torch.isfinite(total):
        raise FloatingPointError(
            f"non-finite autoencoder loss (mse={_f(mse)}, morph={_f(morph)})"
        )
    sgd_backward_step(model, total, state, adam)
    return {"total": _f(total), "mse": _f(mse), "morph": _f(morph)}


def train_motion_ae(data: PreparedData, cfg: RunConfig, morph_weight: float | None = None,
                    seed: int | None = None, steps: int | None = None,
                    log: JsonlLogger | None = None) -> tuple[MotionAutoencoder, AdamState, list[dict]]:
    seed = cfg.seed if seed is None else seed
    steps = cfg.ae_steps if steps is None else steps
    morph_weight = cfg.morph_recon_weight if morph_weight is None else morph_weight
    seed_all(seed + _STAGE_SEEDS["ae"])
    log = log or JsonlLogger()

    model = MotionAutoencoder(channels=cfg.ae_channels, latent_dim=cfg.latent_dim)
    state = init_adam_state(dict(model.named_parameters()))
    adam = AdamConfig(lr=cfg.ae_lr)
    bone_idx = bone_index_tensors(data.topo)
    stats_t = stats_tensors(data.stats) if data.stats is not None else None
    rng = _stage_rng(seed, "ae")
    train_ids = data.split.train
    history = []
    for step in range(1, steps + 1):
        ids = rng.choice(train_ids, size=min(cfg.ae_batch, len(train_ids)), replace=False)
        x, frame_mask = pad_batch([data.norm_seqs[i] for i in ids])
        row = ae_train_step(model, x, frame_mask, state, adam, bone_idx, stats_t, morph_weight)
        if step == 1 or step == steps or step % 100 == 0:
            row = {"step": step, **row}
            history.append(row)
            log.log(stage="ae", **row)
    return model, state, history


def encode_latents(model: MotionAutoencoder, data: PreparedData,
                   ids: list[int]) -> dict[int, np.ndarray]:
    """Frozen-encoder latent dumps (float32), keyed by record id."""
    out: dict[int, np.ndarray] = {}
    with torch.no_grad():
        for i in ids:
            x = torch.from_numpy(data.norm_seqs[i]).unsqueeze(0)
            out[i] = model.encode(x)[0].numpy().astype(np.float32)
    return out


def reconstruct_records(model: MotionAutoencoder, data: PreparedData,
                        ids: list[int]) -> list[np.ndarray]:
    """Denormalized (L, 76) reconstructions for the given record ids."""
    out = []
    with torch.no_grad():
        for i in ids:
            seq = data.norm_seqs[i]
            x = torch.from_numpy(seq).unsqueeze(0)
            z = model.encode(x)
            x_hat = model.decode(z, seq.shape[0])[0].double().numpy()
            if data.stats is not None:
                x_hat = denormalize(x_hat, data.stats)
            out.append(x_hat.astype(np.float32))
    return out


def reconstruction_mme(model: MotionAutoencoder, data: PreparedData, ids: list[int]) -> float:
    recons = reconstruct_records(model, data, ids)
    values = [
        mme(recon.astype(np.float64), data.records[i].tpose_bone_lengths, data.topo)
        for i, recon in zip(ids, recons)
    ]
    return float(np.mean(values))


# --------------------------------------------------------------------------
# stage 2a: morphology critic on frozen latents


def pad_latents(zs: list[np.ndarray], dtype=torch.float32):
    """Right-pad latent sequences; returns (B, Tmax, d), lengths, pad mask."""
    tmax = max(z.shape[0] for z in zs)
    out = torch.zeros(len(zs), tmax, zs[0].shape[1], dtype=dtype)
    lengths = torch.zeros(len(zs), dtype=torch.long)
    pad = torch.ones(len(zs), tmax, dtype=torch.bool)
    for i, z in enumerate(zs):
        out[i, : z.shape[0]] = torch.as_tensor(z, dtype=dtype)
        lengths[i] = z.shape[0]
        pad[i, : z.shape[0]] = False
    return out, lengths, pad


def train_morph_critic(data: PreparedData, latents: dict[int, np.ndarray], cfg: RunConfig,
                       seed: int | None = None, steps: int | None = None,
                       log: JsonlLogger | None = None) -> tuple[MorphologyCritic, AdamState, list[dict]]:
    seed = cfg.seed if seed is None else seed
    steps = cfg.critic_steps if steps is None else steps
    seed_all(seed + _STAGE_SEEDS["critic"])
    log = log or JsonlLogger()

    model = MorphologyCritic(latent_dim=cfg.latent_dim, hidden=cfg.critic_hidden)
    state = init_adam_state(dict(model.named_parameters()))
    adam = AdamConfig(lr=cfg.critic_lr)
    rng = _stage_rng(seed, "critic")
    train_ids = [i for i in data.split.train if i in latents]
    history = []
    for step in range(1, steps + 1):
        ids = rng.choice(train_ids, size=min(cfg.critic_batch, len(train_ids)), replace=False)
        z, lengths, _ = pad_latents([latents[i] for i in ids])
        bones = torch.tensor(
            np.stack([data.records[i].tpose_bone_lengths for i in ids]), dtype=torch.float32
        )
        loss = pretrain_loss(model, z, bones, lengths)
        if not torch.isfinite(loss):
            raise FloatingPointError(f"non-finite critic loss at step {step}")
        state = sgd_backward_step(model, loss, state, adam)
        if step == 1 or step == steps or step % 100 == 0:
            row = {"step": step, "loss": _f(loss)}
            history.append(row)
            log.log(stage="critic", **row)
    return model, state, history


def critic_mae(model: MorphologyCritic, data: PreparedData, latents: dict[int, np.ndarray],
               ids: list[int]) -> float:
    """Mean absolute per-bone error of critic predictions on given records."""
    ids = [i for i in ids if i in latents]
    z, lengths, _ = pad_latents([latents[i] for i in ids])
    bones = np.stack([data.records[i].tpose_bone_lengths for i in ids])
    with torch.no_grad():
        pred = model(z, lengths).double().numpy()
    return float(np.abs(pred - bones).mean())


# --------------------------------------------------------------------------
# stage 2b: masked generator


@dataclass
class GenBatch:
    Z: torch.Tensor
    mask: torch.Tensor
    noise: torch.Tensor
    taus: torch.Tensor
    tpose_flat: torch.Tensor
    bones: torch.Tensor
    motion_pad: torch.Tensor
    lengths: torch.Tensor
    text_arrays: list[np.ndarray | None]  # None marks a condition-dropout sample


@dataclass
class RecordConditions:
    """Per-record conditioning caches for generator training."""

    tpose_flat: dict[int, np.ndarray]
    bones: dict[int, np.ndarray]
    captions: dict[int, list[str]]
    text_cache: dict[str, np.ndarray]


def record_conditions(data: PreparedData, provider: EmbeddingProvider,
                      ids: list[int]) -> RecordConditions:
    tpose_flat: dict[int, np.ndarray] = {}
    bones: dict[int, np.ndarray] = {}
    captions: dict[int, list[str]] = {}
    text_cache: dict[str, np.ndarray] = {}
    for i in ids:
        rec = data.records[i]
        pose = forward_kinematics_tpose(rec.tpose_bone_lengths, data.topo)
        tpose_flat[i] = flatten_tpose(pose).astype(np.float32)
        bones[i] = rec.tpose_bone_lengths.astype(np.float32)
        captions[i] = rec.captions
        for cap in rec.captions:
            if cap not in text_cache:
                feats = provider.text_features(cap)
                text_cache[cap] = np.concatenate([feats.sentence[None], feats.words]).astype(np.float32)
    return RecordConditions(tpose_flat=tpose_flat, bones=bones, captions=captions,
                            text_cache=text_cache)


def assemble_gen_batch(ids, latents, conds: RecordConditions, rng,
                       text_dropout: float) -> GenBatch:
    zs = [latents[i] for i in ids]
    Z, lengths, motion_pad = pad_latents(zs)
    B, tmax, d = Z.shape

    mask = torch.zeros(B, tmax, dtype=torch.bool)
    for row, z in enumerate(zs):
        mask[row, : z.shape[0]] = torch.from_numpy(sample_training_mask(z.shape[0], rng))

    taus = torch.tensor(rng.uniform(0.0, 1.0, size=(B, tmax)), dtype=torch.float32)
    noise = torch.tensor(rng.standard_normal((B, tmax, d)), dtype=torch.float32)
    poses = torch.tensor(np.stack([conds.tpose_flat[i] for i in ids]), dtype=torch.float32)
    bones = torch.tensor(np.stack([conds.bones[i] for i in ids]), dtype=torch.float32)
    text_arrays: list[np.ndarray | None] = []
    for i in ids:
        if rng.uniform() < text_dropout:
            text_arrays.append(None)
        else:
            caps = conds.captions[i]
            text_arrays.append(conds.text_cache[caps[int(rng.integers(len(caps)))]])
    return GenBatch(Z=Z, mask=mask, noise=noise, taus=taus, tpose_flat=poses,
                    bones=bones, motion_pad=motion_pad, lengths=lengths,
                    text_arrays=text_arrays)


def build_text_tokens(model: MaskedMotionGenerator, text_arrays):
    """Stack per-sample caption token arrays (None -> learned null tokens)."""
    rows = [
        model.null_tokens() if arr is None else torch.from_numpy(arr).to(model.dtype)
        for arr in text_arrays
    ]
    n_max = max(r.shape[0] for r in rows)
    tokens = torch.zeros(len(rows), n_max, rows[0].shape[1], dtype=model.dtype)
    pad = torch.ones(len(rows), n_max, dtype=torch.bool)
    for i, r in enumerate(rows):
        tokens[i, : r.shape[0]] = r
        pad[i, : r.shape[0]] = False
    return tokens, pad


def gen_train_step(model, critic, batch: GenBatch, state, adam, morph_guide_weight):
    tokens, text_pad = build_text_tokens(model, batch.text_arrays)
    total, flow, guide = gen_total_loss(
        model, critic, batch.Z, batch.mask, batch.noise, batch.taus,
        batch.tpose_flat, tokens, batch.bones, text_pad=text_pad,
        motion_pad=batch.motion_pad, lengths=batch.lengths,
        morph_guide_weight=morph_guide_weight,
    )
    if not torch.isfinite(total):
        raise FloatingPointError(
            f"non-finite generator loss (flow={_f(flow)}, guide={_f(guide)})"
        )
    sgd_backward_step(model, total, state, adam)
    return {"total": _f(total), "flow": _f(flow), "guide": _f(guide)}


def train_generator(data: PreparedData, latents: dict[int, np.ndarray],
                    critic: MorphologyCritic, provider: EmbeddingProvider, cfg: RunConfig,
                    morph_guide_weight: float | None = None, seed: int | None = None,
                    steps: int | None = None, log: JsonlLogger | None = None
                    ) -> tuple[MaskedMotionGenerator, AdamState, list[dict]]:
    seed = cfg.seed if seed is None else seed
    steps = cfg.gen_steps if steps is None else steps
    weight = cfg.morph_guide_weight if morph_guide_weight is None else morph_guide_weight
    seed_all(seed + _STAGE_SEEDS["gen"])
    log = log or JsonlLogger()

    critic.freeze()
    model = MaskedMotionGenerator(latent_dim=cfg.latent_dim, text_dim=cfg.text_dim,
                                  blocks=cfg.gen_blocks, heads=cfg.gen_heads)
    state = init_adam_state(dict(model.named_parameters()))
    adam = AdamConfig(lr=cfg.gen_lr)

    train_ids = [i for i in data.split.train if i in latents]
    conds = record_conditions(data, provider, train_ids)

    rng = _stage_rng(seed, "gen")
    history = []
    for step in range(1, steps + 1):
        ids = rng.choice(train_ids, size=min(cfg.gen_batch, len(train_ids)), replace=False)
        batch = assemble_gen_batch(ids, latents, conds, rng, cfg.text_dropout)
        row = gen_train_step(model, critic, batch, state, adam, weight)
        if step == 1 or step == steps or step % 100 == 0:
            row = {"step": step, **row}
            history.append(row)
            log.log(stage="gen", **row)
    return model, state, history


# --------------------------------------------------------------------------
# matcher + evaluation


def train_matcher(data: PreparedData, provider: EmbeddingProvider, cfg: RunConfig,
                  seed: int | None = None, steps: int | None = None,
                  log: JsonlLogger | None = None) -> tuple[ToyMatcher, AdamState, list[dict]]:
    seed = cfg.seed if seed is None else seed
    steps = cfg.matcher_steps if steps is None else steps
    seed_all(seed + _STAGE_SEEDS["matcher"])
    log = log or JsonlLogger()

    model = ToyMatcher(text_dim=cfg.text_dim, hidden=cfg.matcher_hidden,
                       embed_dim=cfg.matcher_dim)
    state = init_adam_state(dict(model.named_parameters()))
    adam = AdamConfig(lr=cfg.matcher_lr)
    rng = _stage_rng(seed, "matcher")
    train_ids = data.split.train

    sent_cache: dict[str, np.ndarray] = {}
    for i in train_ids:
        for cap in data.records[i].captions:
            if cap not in sent_cache:
                sent_cache[cap] = provider.text_features(cap).sentence.astype(np.float32)

    history = []
    for step in range(1, steps + 1):
        ids = rng.choice(train_ids, size=min(cfg.matcher_batch, len(train_ids)), replace=False)
        x, frame_mask = pad_batch([data.norm_seqs[i] for i in ids])
        caps = [
            data.records[i].captions[int(rng.integers(len(data.records[i].captions)))]
            for i in ids
        ]
        sent = torch.tensor(np.stack([sent_cache[c] for c in caps]), dtype=torch.float32)
        loss = contrastive_loss(model.embed_motion(x, frame_mask), model.embed_text(sent),
                                cfg.matcher_temperature)
        if not torch.isfinite(loss):
            raise FloatingPointError(f"non-finite matcher loss at step {step}")
        state = sgd_backward_step(model, loss, state, adam)
        if step == 1 or step == steps or step % 100 == 0:
            row = {"step": step, "loss": _f(loss)}
            history.append(row)
            log.log(stage="matcher", **row)
    return model, state, history


def embed_motions(matcher: ToyMatcher, stats: NormStats | None,
                  motions: list[np.ndarray]) -> np.ndarray:
    """Unit-norm matcher embeddings of raw (denormalized) motions."""
    feats = []
    with torch.no_grad():
        for m in motions:
            arr = np.asarray(m, dtype=np.float64)
            if stats is not None:
                arr = normalize(arr, stats)
            x = torch.as_tensor(arr, dtype=torch.float32).unsqueeze(0)
            feats.append(matcher.embed_motion(x)[0].numpy())
    return np.stack(feats)


def embed_captions(matcher: ToyMatcher, provider: EmbeddingProvider,
                   captions: list[str]) -> np.ndarray:
    with torch.no_grad():
        sent = torch.tensor(
            np.stack([provider.text_features(c).sentence for c in captions]),
            dtype=torch.float32,
        )
        return matcher.embed_text(sent).numpy()


def eval_record_set(matcher: ToyMatcher, data: PreparedData, provider: EmbeddingProvider,
                    ids: list[int], rng: np.random.Generator, pool_size: int = 32,
                    num_pairs: int | None = None) -> dict:
    """Distribution/retrieval metrics of real records in matcher space."""
    motions = [data.records[i].motion for i in ids]
    captions = [data.records[i].captions[0] for i in ids]
    m = embed_motions(matcher, data.stats, motions)
    t = embed_captions(matcher, provider, captions)
    num_pairs = num_pairs or max(1, len(ids) // 4)
    return {
        "r_precision_top1": r_precision(m, t, 1, pool_size, rng),
        "r_precision_top2": r_precision(m, t, 2, pool_size, rng),
        "r_precision_top3": r_precision(m, t, 3, pool_size, rng),
        "mm_dist": mm_dist(m, t),
        "diversity": diversity(m, num_pairs, rng),
    }


def generate_for_records(bundle: PipelineBundle, data: PreparedData, ids: list[int],
                         seed: int) -> list[GenerationResult]:
    """Generate one motion per record, prompted by its first caption."""
    out = []
    for j, i in enumerate(ids):
        rec = data.records[i]
        out.append(
            generate_motion(bundle, rec.captions[0], rec.species_name, rec.length, seed + j)
        )
    return out


def generated_eval(bundle: PipelineBundle, matcher: ToyMatcher, data: PreparedData,
                   provider: EmbeddingProvider, ids: list[int], seed: int,
                   rng: np.random.Generator, pool_size: int = 32,
                   reference_bones: str = "record") -> dict:
    """Metrics for generated motions against their prompt records.

    reference_bones selects the morphology reference for the error metric:
    the record's true bone lengths, or the sampled ones actually conditioned
    on ("sampled", the only option for unseen species).
    """
    results = generate_for_records(bundle, data, ids, seed)
    captions = [data.records[i].captions[0] for i in ids]

    mme_vals = []
    for i, res in zip(ids, results):
        ref = data.records[i].tpose_bone_lengths if reference_bones == "record" else res.bone_lengths
        mme_vals.append(mme(res.motion.astype(np.float64), ref, data.topo))

    gen_feats = embed_motions(matcher, data.stats, [r.motion for r in results])
    text_feats = embed_captions(matcher, provider, captions)
    real_feats = embed_motions(matcher, data.stats, [data.records[i].motion for i in ids])

    report = {
        "mme": float(np.mean(mme_vals)),
        "mm_dist": mm_dist(gen_feats, text_feats),
        "fid": fid(gen_feats, real_feats),
    }
    if len(ids) >= pool_size:
        report["r_precision_top1"] = r_precision(gen_feats, text_feats, 1, pool_size, rng)
    if len(ids) >= 8:
        report["diversity"] = diversity(gen_feats, max(1, len(ids) // 4), rng)
    return report


def make_bundle(data: PreparedData, provider: EmbeddingProvider, cfg: RunConfig,
                tpose_model: TPoseVae, motion_model: MotionAutoencoder,
                generator: MaskedMotionGenerator) -> PipelineBundle:
    return PipelineBundle(
        topo=data.topo,
        provider=provider,
        tpose_model=tpose_model,
        motion_model=motion_model,
        generator=generator,
        stats=data.stats,
        fill_iterations=cfg.fill_iterations,
        ode_steps=cfg.ode_steps,
        guidance_scale=cfg.guidance_scale,
    )


def default_provider(cfg: RunConfig) -> HashingProvider:
    return HashingProvider(dim=cfg.text_dim, seed=cfg.seed)
