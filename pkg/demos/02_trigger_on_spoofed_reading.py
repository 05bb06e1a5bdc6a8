"""Watch the drift trigger react to a spoofed sensor.

From window 10 the recorded reading of a hub sensor is offset by five standard
deviations. The per-window causal graph changes shape, the edge-weight
similarity to the previous window drops below 0.9 and the trigger fires.
"""

from causaldetect import PipelineConfig, TriggerState, check_trigger, discover, generate
from causaldetect.synth import hub_scenario

cfg = PipelineConfig()
scenario = generate(hub_scenario(seed=0), n_windows=30, k=600)
names = list(scenario.stream.schema.feature_names)
state = TriggerState(cfg.trigger.similarity_threshold, cfg.trigger.bins, (0.0, cfg.trigger.w_max))

print("window  label  similarity")
for window in list(scenario.stream)[:14]:
    graph = discover(window.data, cfg.max_lag, cfg.discovery, names)
    event = check_trigger(state, graph, window.index)
    sim = state.last_similarity
    mark = "  <- trigger" if event else ""
    print(f"{window.index:6d}  {window.label:5d}  {'-' if sim is None else f'{sim:.3f}'}{mark}")
    if event:
        break
