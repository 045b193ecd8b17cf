"""Magnitude pruning and the complexity report.

Builds the full-size reference model, applies the standard density plan
(GRUs at 0.6, fully-connected layers at 0.65, the last three layers dense)
and prints parameter/FLOPS accounting before and after, plus a wall-clock
real-time-factor benchmark of the pruned model.
"""

from fwgan.generator import GeneratorConfig, random_model
from fwgan.sparsity import bench_rtf, count_flops, paper_density_plan, prune

cfg = GeneratorConfig.reference()
model = random_model(cfg, seed=0)

dense = count_flops(model)
print(f"dense model : {dense.params_total:>9} params, "
      f"{dense.matrix_flops / 1e9:.2f} GFLOPS ({dense.label})")

plan = paper_density_plan(model)
pruned_model = prune(model, plan)
pruned = count_flops(pruned_model)
print(f"pruned model: {pruned.params_active:>9} active, "
      f"{pruned.matrix_flops / 1e9:.2f} GFLOPS ({pruned.label})")

print()
print("per-layer breakdown (pruned):")
print(pruned.as_table())

print()
print("benchmarking 1 s of streaming synthesis...")
rep = bench_rtf(pruned_model, seconds=1.0, runs=3, cfg=cfg)
print(rep.as_text())
