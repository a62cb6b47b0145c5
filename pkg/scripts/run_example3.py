"""Train and test the two-channel GCNN over a range of seeds."""

import argparse

from gmf_gcnn.experiments import ExperimentConfig, run_example3_test, run_example3_train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--noise", type=float, default=0.05)
    ap.add_argument("--activation", choices=("relu", "leaky-relu"), default="relu")
    ap.add_argument("--out", default="out/example3")
    args = ap.parse_args()
    for seed in range(args.seeds):
        cfg = ExperimentConfig(seed=seed, noise_std=args.noise, activation=args.activation,
                               output_dir=f"{args.out}/seed{seed}")
        tr = run_example3_train(cfg)
        te = run_example3_test(tr.checkpoint_path, cfg)
        print(f"seed {seed}: accuracy {te.accuracy:.2f}, early mean P1 {tr.log.p1()[:10].mean():.3f}")


if __name__ == "__main__":
    main()
