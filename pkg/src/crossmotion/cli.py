"""Command-line surface for the whole pipeline.

Exit codes: 0 success, 2 configuration/usage errors, 3 I/O and file-format
errors, 4 numeric failures. Stage training appends JSON-lines logs under the
run directory (config `run_dir`, overridable via CROSSMOTION_RUN_DIR).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import (
    Block,
    Checkpoint,
    CheckpointError,
    block_from_module,
    load_checkpoint,
    load_module_from_block,
    save_checkpoint,
)
from .config import ConfigError, RunConfig
from .dataset import (
    ContainerError,
    load_manifest,
    make_splits,
    read_container,
    save_manifest,
    write_container,
)
from .features import decode_to_global
from .generator import MaskedMotionGenerator, cross_species_transition, generate_motion
from .matcher import ToyMatcher
from .metrics import mme
from .morph_critic import MorphologyCritic
from .motion_ae import MotionAutoencoder
from .skeleton import canonical_topology, retarget_to_unified
from .tpose_vae import TPoseVae
from . import training
from .training import (
    JsonlLogger,
    PreparedData,
    build_dataset,
    default_provider,
    encode_latents,
    make_bundle,
    prepare_data,
)

STAGE_BLOCKS = {
    "cgae": "tpose_vae",
    "ae": "motion_ae",
    "mcm": "morph_critic",
    "gen": "generator",
    "matcher": "matcher",
}


def _run_dir(cfg: RunConfig) -> Path:
    path = Path(os.environ.get("CROSSMOTION_RUN_DIR", cfg.run_dir))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig()
    for attr, key in (("seed", "seed"), ("data", "data_path")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _load_prepared(cfg: RunConfig) -> PreparedData:
    records, topo, stats = read_container(cfg.data_path)
    split, holdout, _ = load_manifest(cfg.resolved_manifest_path)
    return prepare_data(cfg, records, split, stats, topo, holdout)


def _load_or_init_checkpoint(path, cfg: RunConfig, stats) -> Checkpoint:
    if Path(path).exists():
        return load_checkpoint(path)
    return Checkpoint(config=cfg, stats=stats, blocks={})


def _require_blocks(ckpt: Checkpoint, names: list[str]) -> None:
    missing = [n for n in names if n not in ckpt.blocks]
    if missing:
        raise ConfigError(
            f"checkpoint is missing blocks {missing}; train those stages first"
        )


def _build_models(cfg: RunConfig, topo):
    return {
        "tpose_vae": lambda: TPoseVae(topo, cond_dim=cfg.cond_dim, hidden=cfg.tpose_hidden,
                                      latent_dim=cfg.pose_latent_dim),
        "motion_ae": lambda: MotionAutoencoder(channels=cfg.ae_channels, latent_dim=cfg.latent_dim),
        "morph_critic": lambda: MorphologyCritic(latent_dim=cfg.latent_dim, hidden=cfg.critic_hidden),
        "generator": lambda: MaskedMotionGenerator(latent_dim=cfg.latent_dim, text_dim=cfg.text_dim,
                                                   blocks=cfg.gen_blocks, heads=cfg.gen_heads),
        "matcher": lambda: ToyMatcher(text_dim=cfg.text_dim, hidden=cfg.matcher_hidden,
                                      embed_dim=cfg.matcher_dim),
    }


def _restore(ckpt: Checkpoint, cfg: RunConfig, topo, name: str):
    module = _build_models(cfg, topo)[name]()
    load_module_from_block(module, ckpt.blocks[name])
    return module


def cmd_dataset_gen(args) -> int:
    cfg = _load_config(args)
    records, split, stats, topo, holdout = build_dataset(cfg)
    out = Path(cfg.data_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_container(out, records, topo, stats)
    save_manifest(cfg.resolved_manifest_path, split, holdout, cfg.split_seed)
    print(json.dumps({
        "records": len(records),
        "species": cfg.species_count,
        "holdout_species": sorted(holdout),
        "train": len(split.train), "val": len(split.val),
        "test": len(split.test), "unseen_test": len(split.unseen_test),
        "container": str(out),
    }))
    return 0


def cmd_dataset_split(args) -> int:
    cfg = _load_config(args)
    records, _topo, _stats = read_container(cfg.data_path)
    holdout = set(args.holdout.split(",")) if args.holdout else training.default_holdout(cfg)
    seed = cfg.split_seed if args.split_seed is None else args.split_seed
    split = make_splits(records, holdout, seed)
    save_manifest(cfg.resolved_manifest_path, split, holdout, seed)
    print(json.dumps({"train": len(split.train), "val": len(split.val),
                      "test": len(split.test), "unseen_test": len(split.unseen_test)}))
    return 0


def cmd_dataset_inspect(args) -> int:
    records, topo, stats = read_container(args.data)
    by_species: dict[str, int] = {}
    for r in records:
        by_species[r.species_name] = by_species.get(r.species_name, 0) + 1
    lengths = [r.length for r in records]
    print(json.dumps({
        "records": len(records),
        "joints": topo.num_joints,
        "bones": topo.num_bones,
        "species": by_species,
        "length_min": int(min(lengths)) if lengths else None,
        "length_max": int(max(lengths)) if lengths else None,
        "stats_mean_norm": float(np.linalg.norm(stats.mean)),
    }, sort_keys=True))
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    data = _load_prepared(cfg)
    provider = default_provider(cfg)
    ckpt = _load_or_init_checkpoint(args.ckpt, cfg, data.container_stats)
    log = JsonlLogger(_run_dir(cfg) / f"train_{args.stage}.jsonl")
    steps = args.steps

    if args.stage == "cgae":
        model, state, history = training.train_tpose_vae(data, provider, cfg, steps=steps, log=log)
    elif args.stage == "ae":
        model, state, history = training.train_motion_ae(data, cfg, steps=steps, log=log)
    elif args.stage == "mcm":
        _require_blocks(ckpt, ["motion_ae"])
        ae = _restore(ckpt, cfg, data.topo, "motion_ae")
        latents = encode_latents(ae, data, data.split.train + data.split.val)
        model, state, history = training.train_morph_critic(data, latents, cfg, steps=steps, log=log)
    elif args.stage == "gen":
        _require_blocks(ckpt, ["motion_ae", "morph_critic"])
        ae = _restore(ckpt, cfg, data.topo, "motion_ae")
        critic = _restore(ckpt, cfg, data.topo, "morph_critic")
        latents = encode_latents(ae, data, data.split.train)
        model, state, history = training.train_generator(data, latents, critic, provider, cfg,
                                                         steps=steps, log=log)
    elif args.stage == "matcher":
        model, state, history = training.train_matcher(data, provider, cfg, steps=steps, log=log)
    else:
        raise ConfigError(f"unknown training stage {args.stage!r}")

    log.close()
    ckpt.blocks[STAGE_BLOCKS[args.stage]] = block_from_module(model, state)
    ckpt.config = cfg
    ckpt.stats = data.container_stats
    Path(args.ckpt).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(args.ckpt, ckpt)
    last = history[-1] if history else {}
    print(json.dumps({"stage": args.stage, "ckpt": args.ckpt, "last": last}))
    return 0


def _bundle_from_checkpoint(cfg: RunConfig, data: PreparedData, ckpt: Checkpoint):
    _require_blocks(ckpt, ["tpose_vae", "motion_ae", "generator"])
    provider = default_provider(cfg)
    return make_bundle(
        data, provider, cfg,
        _restore(ckpt, cfg, data.topo, "tpose_vae"),
        _restore(ckpt, cfg, data.topo, "motion_ae"),
        _restore(ckpt, cfg, data.topo, "generator"),
    )


def _save_motion_npz(path, motion: np.ndarray) -> None:
    world = decode_to_global(motion.astype(np.float64))
    np.savez(path, motion=motion, world=world.joints_world, yaw=world.root_yaw)


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    data = _load_prepared(cfg)
    ckpt = load_checkpoint(args.ckpt)
    bundle = _bundle_from_checkpoint(cfg, data, ckpt)
    result = generate_motion(bundle, args.caption, args.species, args.length, args.seed)
    _save_motion_npz(args.out, result.motion)
    print(json.dumps({
        "out": args.out,
        "length": int(result.motion.shape[0]),
        "mme_vs_sampled_bones": mme(result.motion.astype(np.float64), result.bone_lengths, data.topo),
    }))
    return 0


def cmd_transition(args) -> int:
    cfg = _load_config(args)
    data = _load_prepared(cfg)
    ckpt = load_checkpoint(args.ckpt)
    bundle = _bundle_from_checkpoint(cfg, data, ckpt)
    rec_a = data.records[args.record_a]
    rec_b = data.records[args.record_b]
    from .skeleton import forward_kinematics_tpose

    tpose = forward_kinematics_tpose(rec_b.tpose_bone_lengths, data.topo)
    result = cross_species_transition(
        bundle, rec_a.motion.astype(np.float64), rec_b.motion.astype(np.float64),
        args.gap, args.caption, tpose, args.seed,
    )
    _save_motion_npz(args.out, result.motion)
    print(json.dumps({
        "out": args.out,
        "length": int(result.motion.shape[0]),
        "seam_start_frame": 4 * result.prefix_len,
        "seam_end_frame": 4 * (result.prefix_len + result.gap_len),
    }))
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    data = _load_prepared(cfg)
    ckpt = load_checkpoint(args.ckpt)
    _require_blocks(ckpt, ["matcher"])
    provider = default_provider(cfg)
    matcher = _restore(ckpt, cfg, data.topo, "matcher")

    reports = []
    for rep in range(args.repeats):
        rng = np.random.default_rng(cfg.seed + 1000 + rep)
        ids = data.split.test
        report = {"real": training.eval_record_set(matcher, data, provider, ids, rng)}
        real_mme = [
            mme(data.records[i].motion.astype(np.float64), data.records[i].tpose_bone_lengths, data.topo)
            for i in ids[: min(64, len(ids))]
        ]
        report["real"]["mme"] = float(np.mean(real_mme))
        if args.generated:
            bundle = _bundle_from_checkpoint(cfg, data, ckpt)
            gen_ids = ids[: args.generated]
            report["generated"] = training.generated_eval(
                bundle, matcher, data, provider, gen_ids, cfg.seed + 2000 + rep, rng
            )
        reports.append(report)

    def _aggregate(key: str) -> dict:
        keys = reports[0][key].keys()
        return {
            k: {"mean": float(np.mean([r[key][k] for r in reports])),
                "std": float(np.std([r[key][k] for r in reports]))}
            for k in keys
        }

    doc = {
        "config": {"seed": cfg.seed, "pool_size": 32, "repeats": args.repeats,
                   "generated": args.generated},
        "metrics": {"real": _aggregate("real")},
    }
    if args.generated:
        doc["metrics"]["generated"] = _aggregate("generated")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps({"report": str(out)}))
    return 0


def cmd_retarget(args) -> int:
    src = np.load(args.joints)["joints"]
    with open(args.map, encoding="utf-8") as fh:
        raw = json.load(fh)
    joint_map = {int(k): (None if v is None else int(v)) for k, v in raw.items()}
    out = retarget_to_unified(src, joint_map, args.scale, canonical_topology())
    np.savez(args.out, joints=out)
    print(json.dumps({"out": args.out, "frames": int(np.atleast_3d(out).shape[0])}))
    return 0


def cmd_export_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = np.load(args.motion)
    world = data["world"]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tracked = [0, 5, 9, 13, 17, 21, 24]
    topo = canonical_topology()
    fig, axes = plt.subplots(len(tracked), 3, figsize=(10, 2 * len(tracked)), sharex=True)
    for row, j in enumerate(tracked):
        for col, axis_name in enumerate("xyz"):
            axes[row, col].plot(world[:, j, col])
            axes[row, col].set_ylabel(f"{topo.joint_names[j]}.{axis_name}", fontsize=7)
    axes[-1, 1].set_xlabel("frame")
    fig.tight_layout()
    traj_path = out_dir / "joint_trajectories.png"
    fig.savefig(traj_path, dpi=100)
    plt.close(fig)

    disp = np.linalg.norm(np.diff(world, axis=0), axis=2).max(axis=1)
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(disp, label="max joint displacement per frame step")
    if args.seam is not None:
        ax.axvline(args.seam, color="red", linestyle="--", label="seam")
    ax.set_xlabel("frame")
    ax.set_ylabel("m/frame")
    ax.legend(fontsize=8)
    fig.tight_layout()
    seam_path = out_dir / "seam_continuity.png"
    fig.savefig(seam_path, dpi=100)
    plt.close(fig)

    print(json.dumps({"plots": [str(traj_path), str(seam_path)]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossmotion",
                                     description="cross-species text-to-motion pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="dataset generation and inspection")
    ds_sub = ds.add_subparsers(dest="subcommand", required=True)

    gen = ds_sub.add_parser("gen", help="generate the synthetic dataset container")
    gen.add_argument("--config", default=None)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--data", default=None, help="output container path override")
    gen.set_defaults(func=cmd_dataset_gen)

    spl = ds_sub.add_parser("split", help="recompute the split manifest")
    spl.add_argument("--config", default=None)
    spl.add_argument("--data", default=None)
    spl.add_argument("--split-seed", type=int, default=None)
    spl.add_argument("--holdout", default=None, help="comma-separated species names")
    spl.set_defaults(func=cmd_dataset_split)

    ins = ds_sub.add_parser("inspect", help="print a container summary")
    ins.add_argument("--data", required=True)
    ins.set_defaults(func=cmd_dataset_inspect)

    tr = sub.add_parser("train", help="train one pipeline stage")
    tr.add_argument("stage", choices=sorted(STAGE_BLOCKS))
    tr.add_argument("--config", default=None)
    tr.add_argument("--data", default=None)
    tr.add_argument("--ckpt", required=True)
    tr.add_argument("--steps", type=int, default=None)
    tr.set_defaults(func=cmd_train)

    ge = sub.add_parser("generate", help="generate a motion from a caption")
    ge.add_argument("--config", default=None)
    ge.add_argument("--data", default=None)
    ge.add_argument("--ckpt", required=True)
    ge.add_argument("--caption", required=True)
    ge.add_argument("--species", required=True)
    ge.add_argument("--length", type=int, default=64)
    ge.add_argument("--seed", type=int, default=0)
    ge.add_argument("--out", required=True)
    ge.set_defaults(func=cmd_generate)

    trn = sub.add_parser("transition", help="in-fill a cross-species transition")
    trn.add_argument("--config", default=None)
    trn.add_argument("--data", default=None)
    trn.add_argument("--ckpt", required=True)
    trn.add_argument("--record-a", type=int, required=True)
    trn.add_argument("--record-b", type=int, required=True)
    trn.add_argument("--gap", type=int, default=4)
    trn.add_argument("--caption", required=True)
    trn.add_argument("--seed", type=int, default=0)
    trn.add_argument("--out", required=True)
    trn.set_defaults(func=cmd_transition)

    ev = sub.add_parser("eval", help="metric report on the test split")
    ev.add_argument("--config", default=None)
    ev.add_argument("--data", default=None)
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--generated", type=int, default=0,
                    help="also evaluate this many generated motions")
    ev.add_argument("--repeats", type=int, default=1)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    rt = sub.add_parser("retarget", help="remap a foreign skeleton onto the unified one")
    rt.add_argument("--joints", required=True, help="npz with a 'joints' array")
    rt.add_argument("--map", required=True, help="JSON: unified index -> source index | null")
    rt.add_argument("--scale", type=float, default=1.0)
    rt.add_argument("--out", required=True)
    rt.set_defaults(func=cmd_retarget)

    ep = sub.add_parser("export-plot", help="write trajectory and continuity plots")
    ep.add_argument("--motion", required=True, help="npz produced by generate/transition")
    ep.add_argument("--seam", type=int, default=None)
    ep.add_argument("--out-dir", required=True)
    ep.set_defaults(func=cmd_export_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ContainerError, CheckpointError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
