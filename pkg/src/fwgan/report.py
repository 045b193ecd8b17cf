"""Complexity report: per-layer parameter counts, densities and FLOPS."""

from dataclasses import dataclass, field


@dataclass
class LayerReport:
    name: str
    shape: tuple
    params_total: int
    params_active: int
    flops: float = 0.0

    @property
    def density(self):
        return self.params_active / self.params_total if self.params_total else 1.0


# Headline figures are snapped to a preferred-number series (1, 1.2, 1.5,
# 2, 2.5, 3, 4, 5, 6, 8 per decade), matching how complexity numbers are
# conventionally quoted.
_PREFERRED = (1.0, 1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0)


def approx_gflops_label(flops):
    """Human label like '≈1.5 GFLOPS' for a FLOPS figure."""
    g = flops / 1e9
    if g <= 0:
        return "≈0 GFLOPS"
    scale = 1.0
    while g / scale >= 10.0:
        scale *= 10.0
    while g / scale < 1.0:
        scale /= 10.0
    m = g / scale
    best = min(_PREFERRED, key=lambda p: abs(p - m))
    value = best * scale
    text = f"{value:.10g}"
    return f"≈{text} GFLOPS"


@dataclass
class ComplexityReport:
    layers: list = field(default_factory=list)
    steps_per_second: int = 100
    activation_evals_per_step: int = 0
    activation_flops_per_eval: int = 7

    @property
    def params_total(self):
        return sum(l.params_total for l in self.layers)

    @property
    def params_active(self):
        return sum(l.params_active for l in self.layers)

    @property
    def matrix_flops(self):
        return self.params_active * 2 * self.steps_per_second

    @property
    def activation_flops(self):
        return (
            self.activation_evals_per_step
            * self.activation_flops_per_eval
            * self.steps_per_second
        )

    @property
    def total_flops(self):
        return self.matrix_flops + self.activation_flops

    @property
    def label(self):
        return approx_gflops_label(self.matrix_flops)

    def as_table(self):
        lines = [
            f"{'layer':<24} {'shape':>14} {'params':>10} {'active':>10} "
            f"{'density':>8} {'flops':>12}"
        ]
        for l in self.layers:
            shape = f"{l.shape[0]}x{l.shape[1]}"
            lines.append(
                f"{l.name:<24} {shape:>14} {l.params_total:>10} "
                f"{l.params_active:>10} {l.density:>8.3f} {l.flops:>12.0f}"
            )
        lines.append("-" * len(lines[0]))
        lines.append(f"total parameters     : {self.params_total}")
        lines.append(f"active parameters    : {self.params_active}")
        lines.append(
            f"matrix cost          : {self.matrix_flops / 1e9:.2f} GFLOPS "
            f"({self.label})"
        )
        lines.append(
            f"activation cost      : {self.activation_flops / 1e6:.2f} MFLOPS "
            f"({self.activation_evals_per_step} evals/step x "
            f"{self.activation_flops_per_eval} FLOPS)"
        )
        lines.append(f"total                : {self.total_flops / 1e9:.2f} GFLOPS")
        return "\n".join(lines)

    def as_keyvalues(self):
        lines = []
        for l in self.layers:
            lines.append(f"layer.{l.name}.shape={l.shape[0]}x{l.shape[1]}")
            lines.append(f"layer.{l.name}.params={l.params_total}")
            lines.append(f"layer.{l.name}.active={l.params_active}")
            lines.append(f"layer.{l.name}.flops={l.flops:.0f}")
        lines.append(f"params_total={self.params_total}")
        lines.append(f"params_active={self.params_active}")
        lines.append(f"steps_per_second={self.steps_per_second}")
        lines.append(f"matrix_flops={self.matrix_flops}")
        lines.append(f"activation_evals_per_step={self.activation_evals_per_step}")
        lines.append(f"activation_flops={self.activation_flops}")
        lines.append(f"total_flops={self.total_flops}")
        lines.append(f"label={self.label}")
        return "\n".join(lines)
