"""Figure rendering for the report-producing commands.

Every figure is written next to its CSV with the same basename; rendering
uses the Agg backend so the CLI works headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_distribution_figure(path, curves, title: str) -> None:
    """CDF and PDF panels; curves is a list of (label, x, cdf, pdf)."""
    fig, (ax_cdf, ax_pdf) = plt.subplots(1, 2, figsize=(10, 4))
    for label, x, cdf, pdf in curves:
        ax_cdf.plot(x, cdf, label=label)
        ax_pdf.plot(x[1:], pdf[1:], label=label)
    ax_cdf.set_xlabel("age x")
    ax_cdf.set_ylabel("P(age <= x)")
    ax_cdf.set_ylim(0.0, 1.02)
    ax_pdf.set_xlabel("age x")
    ax_pdf.set_ylabel("density")
    for ax in (ax_cdf, ax_pdf):
        ax.grid(alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_validation_figure(path, curves, title: str) -> None:
    """Analytic vs empirical CDF overlay; curves is (label, x, analytic, empirical)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, x, analytic, empirical in curves:
        (line,) = ax.plot(x, analytic, label=f"{label} analytic")
        ax.plot(
            x,
            empirical,
            linestyle="--",
            color=line.get_color(),
            label=f"{label} simulated",
        )
    ax.set_xlabel("age x")
    ax.set_ylabel("P(age <= x)")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
