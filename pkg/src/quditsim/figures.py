"""One summary PNG per workload, rendered next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sqed_figure(result: dict, path) -> str:
    """Survival probability over time plus its spectrum with gap markers."""
    arrays, report = result["arrays"], result["report"]
    fig, (ax_t, ax_f) = plt.subplots(2, 1, figsize=(7.5, 6.5))

    ax_t.plot(arrays["times"], np.abs(arrays["g"]) ** 2, lw=0.7, color="tab:blue")
    ax_t.set_xlabel("time")
    ax_t.set_ylabel(r"$|G(t)|^2$")
    ax_t.set_title(f"survival probability ({report['shape']}, n={report['n']}, "
                   f"d={report['d']})")

    freqs, spectrum = arrays["freqs"], arrays["spectrum"]
    positive = freqs > 0
    ax_f.semilogy(freqs[positive], spectrum[positive], lw=0.8, color="tab:blue")
    ax_f.axvline(report["gap_fft"], color="tab:red", ls="--", lw=1.0,
                 label=f"FFT gap {report['gap_fft']:.4f}")
    if "gap_exact" in report:
        ax_f.axvline(report["gap_exact"], color="tab:green", ls=":", lw=1.2,
                     label=f"exact gap {report['gap_exact']:.4f}")
    ax_f.set_xlim(0, min(freqs.max(), 6 * report["gap_fft"] + 1e-9) or None)
    ax_f.set_xlabel("angular frequency")
    ax_f.set_ylabel("spectral weight")
    ax_f.legend(loc="upper right", fontsize=8)

    fig.tight_layout()
    return _save(fig, path)


def qaoa_figure(result: dict, path) -> str:
    """Incumbent cost per feedback round against the reference costs."""
    report = result["report"]
    history = report["history"]
    rounds = np.arange(1, len(history) + 1)
    round_best = [row[2] for row in result["round_rows"]]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.step(rounds, history, where="post", lw=1.6, color="tab:blue",
            label="incumbent")
    ax.plot(rounds, round_best, "o", ms=4, color="tab:orange", alpha=0.7,
            label="round best sample")
    ax.axhline(report["expected_cost_uniform"], color="gray", ls=":",
               label="uniform expectation")
    if "brute_force_cost" in report:
        ax.axhline(report["brute_force_cost"], color="tab:green", ls="--",
                   label="optimum")
    ax.set_xlabel("round")
    ax.set_ylabel("satisfied edges")
    ax.set_title(f"recursive feedback on {report['n']} nodes, d={report['d']}")
    ax.set_xticks(rounds)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def reservoir_figure(result: dict, path) -> str:
    """Held-out window: target series, readout prediction, and baseline."""
    arrays, report = result["arrays"], result["report"]
    y = arrays["y_test"]
    steps = np.arange(len(y))

    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    ax.plot(steps, y, lw=1.4, color="black", label="target")
    ax.plot(steps, arrays["pred_test"], lw=1.1, color="tab:blue",
            label=f"reservoir (NMSE {report['nmse_test']:.3f})")
    ax.plot(steps, arrays["baseline_test"], lw=0.9, color="tab:red", alpha=0.6,
            label=f"memoryless (NMSE {report['nmse_baseline']:.3f})")
    ax.set_xlabel("test step")
    ax.set_ylabel("output")
    ax.set_title(f"{report['task']} readout on {report['n_features']} features")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def synth_figure(result: dict, path) -> str:
    """Objective of the best restart per iteration, log scale."""
    trace = np.asarray(result["arrays"]["objective_trace"], dtype=float)
    report = result["report"]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.semilogy(np.arange(1, len(trace) + 1), np.maximum(trace, 1e-16),
                lw=1.0, color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title(f"synthesis of {report['target_dims']} target, "
                 f"fidelity {report['fidelity']:.6f}")
    fig.tight_layout()
    return _save(fig, path)


RENDERERS = {
    "sqed": sqed_figure,
    "qaoa": qaoa_figure,
    "reservoir": reservoir_figure,
    "synth": synth_figure,
}


def render_figure(workload: str, result: dict, path) -> str:
    return RENDERERS[workload](result, path)
