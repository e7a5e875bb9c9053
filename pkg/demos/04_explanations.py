"""
Reading the attention weights
=============================

After training, each patient gets a weight per feature. Averaging the
weights over a cohort gives a global ranking. The lookup tables for the
categorical and binary features can be exported for geometric inspection.
"""

# %%
from featattn import interpret, pipeline
from featattn.data import default_schema, generate_synthetic_cohort, xor_signal
from featattn.numerics import RandomSource
from featattn.training import TrainConfig

cohort = generate_synthetic_cohort(default_schema(), 1000, xor_signal(), RandomSource(3))
model, report, prepared = pipeline.run(cohort, TrainConfig(epochs=80, seed=3))
print("validation accuracy:", round(report.final_val.accuracy, 3))

# %%
# Patient-level weights. Each row sums to one.
attention = interpret.build_attention_report(model, prepared.stats, prepared.val)
print(attention.to_csv().splitlines()[0][:80], "...")
print("largest simplex violation:", attention.simplex_violation())

# %%
# Global ranking. The planted features are SurgicalTime, PTA and ReResection.
ranking = interpret.global_importance(attention)
for rank, name, weight in zip(ranking.ranks[:6], ranking.features, ranking.weights):
    print(rank, name, round(float(weight), 4))

# %%
# Embedding geometry. With ``dim=3`` the vectors can be plotted directly.
tables = interpret.export_embeddings(model)
pta = tables["PTA"]
print("PTA rows:", pta.labels, "distance between them:", round(float(pta.distances[0, 1]), 4))
