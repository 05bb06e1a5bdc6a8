"""Show that the attack graph keeps what an earlier attack taught it.

Pattern A (spoofed hub x0) runs in windows 5-8, pattern B (hub x5) in 15-18.
With the replay buffer every pattern-A edge is still in the attack graph at
window 20; without it most of them are gone.
"""

from causaldetect import PipelineConfig, generate, run_pipeline
from causaldetect.pipeline import discover_windows
from causaldetect.synth import forgetting_scenario

scenario = generate(forgetting_scenario(0), n_windows=22, k=600)
cfg = PipelineConfig()
graphs = discover_windows(scenario.stream, cfg)


def weight(graph, u, v, lag):
    block = graph.intra if lag == 0 else graph.lags[lag - 1]
    return block[graph.index(u), graph.index(v)]


full = run_pipeline(scenario.stream, scenario.prior, cfg, graphs=graphs, keep_history=True)
plain = run_pipeline(scenario.stream, scenario.prior, cfg.ablate("no_buffer"), graphs=graphs, keep_history=True)
pattern_a = full.state_history[14].buffer.entries
print(f"triggers: {full.triggers}; {len(pattern_a)} pattern-A edges buffered by window 14")
print("edge                 buffered   full@20   no_buffer@20")
for (u, v, lag), w in sorted(pattern_a.items()):
    a = weight(full.state_history[20].attack_graph, u, v, lag)
    b = weight(plain.state_history[20].attack_graph, u, v, lag)
    print(f"{u}->{v} lag {lag:<11d} {w:8.3f}  {a:8.3f}  {b:12.3f}")
