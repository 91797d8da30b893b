"""Train the brushstroke VAE on synthetic stroke images and draw new strokes.

The collected artist scans are not available, so the corpus is rendered:
half the images hold one straight stroke, half hold two or three bent
ones. After training, the script reports reconstruction error per kind and
saves a few samples from the prior.

    python demos/04_vae_brushstrokes.py --out demo_out --epochs 30
"""

import argparse
import time
from pathlib import Path

import numpy as np

from robopaint import vae
from robopaint.canvas import write_pgm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    (args.out / "vae_samples").mkdir(parents=True, exist_ok=True)

    images, kinds = vae.synthetic_corpus(args.count, seed=args.seed)
    print(f"corpus: {images.shape}, mean intensity {images.mean():.3f}")

    cfg = vae.VaeConfig(epochs=args.epochs, seed=args.seed)
    t0 = time.perf_counter()
    model, history = vae.train(images, cfg,
                               progress=lambda s: s.epoch % 10 == 0 and print(
                                   f"  epoch {s.epoch:3d}: loss {s.loss:8.2f} kl {s.kl:6.2f}"))
    print(f"trained {args.epochs} epochs in {time.perf_counter() - t0:.0f} s; "
          f"loss {history[0].loss:.1f} -> {history[-1].loss:.1f}")

    err = ((vae.reconstruct(model, images) - images) ** 2).mean(axis=(1, 2, 3))
    kinds = np.array(kinds)
    for kind in ("simple", "complex"):
        print(f"  {kind:7s} strokes: reconstruction mse {err[kinds == kind].mean():.4f}")

    samples = vae.sample(model, 8, seed=1)
    for i, img in enumerate(samples):
        write_pgm(args.out / "vae_samples" / f"sample_{i}.pgm", img[..., 0])
    vae.save_checkpoint(args.out / "brushstrokes.bvae", model)
    vae.write_history_csv(args.out / "vae_history.csv", history)
    print(f"sample mean intensity {samples.mean():.3f}; wrote samples and checkpoint to {args.out}")


if __name__ == "__main__":
    main()
