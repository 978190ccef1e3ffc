"""Reproduce the segmentation-ambiguity failure and its repair.

The ambiguity-unaware receiver retokenizes stegotext with greedy longest
match, the natural off-the-shelf behaviour. On a prefix-rich vocabulary that
occasionally picks a longer token than the sender emitted; the context then
diverges and every later step decodes garbage. Grouped synchronized sampling
removes the failure mode entirely without touching the sampling distribution.
"""

from syncstego import (
    Key,
    StegoSession,
    SyntheticModelSpec,
    TruncationConfig,
    bytes_to_bits,
    generate_vocabulary,
    make_synthetic,
    run_baseline_roundtrip,
    embed,
    extract,
    total_error,
)

vocab = generate_vocabulary(size=512, prefix_richness=0.5, seed=1)
provider = make_synthetic(SyntheticModelSpec(vocab, seed=42, order=3, concentration=2.0))
message = bytes_to_bits(bytes(range(32)))

print(f"{'session':>7}  {'naive error %':>13}  {'desync step':>11}  {'grouped error %':>15}")
for i in range(8):
    key = Key(bytes([i]) * 32)
    naive = StegoSession(key=key, provider=provider, truncation=TruncationConfig(top_k=256),
                         max_steps=4096, disambiguation="none")
    report = run_baseline_roundtrip(naive, message)

    synced = StegoSession(key=key, provider=provider, truncation=TruncationConfig(top_k=256),
                          max_steps=4096, disambiguation="syncpool")
    out = embed(synced, message)
    recovered = extract(synced, out.stegotext)
    grouped_error = total_error(message, recovered.bits)

    desync = report.desync_step if report.desync_step is not None else "-"
    print(f"{i:>7}  {report.error_pct:>13.2f}  {str(desync):>11}  {grouped_error:>15.2f}")

print("\none wrong segmentation corrupts roughly half of everything after it;")
print("the grouped mode stays at zero because both parties resolve every")
print("prefix-ambiguous choice with the same keyed random draw.")
