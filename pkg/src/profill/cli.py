"""Command-line entry points: maskgen, train, complete, serve."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np


def _maskgen(args) -> int:
    from . import masking

    if args.kind == "center":
        mask = masking.center_mask(args.res, args.res)
    else:
        rng = np.random.default_rng(args.seed)
        spec = masking.MaskSpec(
            min_coverage=args.min_coverage, max_coverage=args.max_coverage
        )
        mask = masking.sample_random_mask(rng, args.res, args.res, spec)
    masking.save_mask_png(mask, args.out)
    print(f"wrote {args.kind} mask {args.res}x{args.res} (coverage {mask.mean():.3f}) to {args.out}")
    return 0


def _train(args) -> int:
    from .data import load_dataset
    from .generator import GeneratorConfig
    from .losses import LossWeights
    from .training import TrainConfig, train

    train_ds, _ = load_dataset(args.data, manifest=args.attrs, split_seed=args.seed)
    names = () if args.unconditional else train_ds.attribute_names
    stages = []
    res = 4
    while res <= args.max_res:
        stages.append(res)
        res *= 2
    cfg = TrainConfig(
        generator=GeneratorConfig(
            max_resolution=args.max_res,
            base_channels=args.base_channels,
            max_channels=args.max_channels,
            n_attributes=len(names),
            skip_variant="residual" if names else "concat",
        ),
        attribute_names=tuple(names),
        stages=tuple(stages),
        steps_fade=args.steps_fade,
        steps_stable=args.steps_stable,
        batch_size=args.batch_size,
        weights=LossWeights(),
        unconditional=args.unconditional,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
    )
    result = train(cfg, train_ds, out_dir=args.out)
    print(f"finished {len(result.metrics)} records; final checkpoint: {result.checkpoint_path}")
    return 0


def _complete(args) -> int:
    from .inference import CompletionRequest, complete, load_model

    model = load_model(args.model)
    with open(args.image, "rb") as fh:
        image_png = fh.read()
    with open(args.mask, "rb") as fh:
        mask_png = fh.read()
    attributes = json.loads(args.attrs) if args.attrs else {}
    request = CompletionRequest(
        image_png=image_png, mask_png=mask_png, attributes=attributes, resolution=args.resolution
    )
    png, echo = complete(model, request)
    with open(args.out, "wb") as fh:
        fh.write(png)
    print(f"completed with attributes {echo}; wrote {args.out}")
    return 0


def _serve(args) -> int:
    from .inference import load_model
    from .server import serve

    model = load_model(args.model)
    print(f"serving stage-{model.stage} model with attributes {list(model.attribute_names)}")
    serve(model, host=args.host, port=args.port)
    return 0


def _add_maskgen(sub) -> None:
    p = sub.add_parser("maskgen", help="generate a mask PNG")
    p.add_argument("--kind", choices=("random", "center"), default="random")
    p.add_argument("--res", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--min-coverage", dest="min_coverage", type=float, default=0.10)
    p.add_argument("--max-coverage", dest="max_coverage", type=float, default=0.30)
    p.set_defaults(func=_maskgen)


def _add_train(sub) -> None:
    p = sub.add_parser("train", help="train a completion model")
    p.add_argument("--data", required=True, help="directory of square PNGs")
    p.add_argument("--attrs", default=None, help="JSON-lines attribute manifest")
    p.add_argument("--max-res", dest="max_res", type=int, default=64)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--unconditional", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps-fade", dest="steps_fade", type=int, default=4000)
    p.add_argument("--steps-stable", dest="steps_stable", type=int, default=4000)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=16)
    p.add_argument("--base-channels", dest="base_channels", type=int, default=16)
    p.add_argument("--max-channels", dest="max_channels", type=int, default=128)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, default=1000)
    p.set_defaults(func=_train)


def _add_complete(sub) -> None:
    p = sub.add_parser("complete", help="complete one masked image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--attrs", default="{}", help='JSON map, e.g. \'{"Male": 1}\'')
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int, default=None)
    p.set_defaults(func=_complete)


def _add_serve(sub) -> None:
    p = sub.add_parser("serve", help="run the completion HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=_serve)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="profill")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_maskgen(sub)
    _add_train(sub)
    _add_complete(sub)
    _add_serve(sub)
    args = parser.parse_args(argv)
    return args.func(args)


def _run_single(name: str, argv=None) -> int:
    """Dispatch a standalone entry point (maskgen/train/complete/serve)."""
    args = [name] + list(sys.argv[1:] if argv is None else argv)
    return main(args)


def maskgen_main(argv=None) -> int:
    return _run_single("maskgen", argv)


def train_main(argv=None) -> int:
    return _run_single("train", argv)


def complete_main(argv=None) -> int:
    return _run_single("complete", argv)


def serve_main(argv=None) -> int:
    return _run_single("serve", argv)


if __name__ == "__main__":
    sys.exit(main())
