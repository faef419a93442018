"""Quick check that the extension module loads and runs."""

import json

import offload

route = offload.Route.bundled("route_4ap")
assert route.hotspot_count == 4
assert abs(route.total_time - 269.0) < 1e-9
nominal = route.scaled()
realized = nominal.realize(seed=3)

dt = offload.Task.delay_tolerant(60.0, nominal.total_time)
for policy in ("prefetch-dt", "prediction-dt", "no-prediction"):
    out = offload.run_trip(realized, nominal, dt, policy)
    assert 0.0 <= out.offload_pct <= 100.0, out
    print(policy, out)

ds = offload.Task.delay_sensitive(50.0)
print("prefetch-ds", offload.run_trip(realized, nominal, ds, "prefetch-ds"))

rows = offload.run_scenario("default_dt", runs=10)
assert rows and all(r[5] == 10 for r in rows)
print(len(rows), "rows from default_dt")

custom = json.dumps({"id": "tiny", "task": {"class": "delay-sensitive", "size_mb": 5}, "runs": 3})
print(offload.run_scenario(custom)[0])

assert offload.ci_halfwidth([4.2] * 30) == 0.0
assert abs(offload.ci_halfwidth([0.0, 1.0]) - 6.353) < 1e-3
assert abs(offload.relative_gain(2.0, 1.0) - 100.0) < 1e-9
print("snr 20 dB ->", offload.snr_to_throughput(20.0))
print(offload.build_prediction(nominal, 0.0)["time_to_next_wifi"])

try:
    offload.Task.delay_sensitive(-1.0)
except ValueError as e:
    print("rejected:", e)
else:
    raise AssertionError("negative size accepted")

print("ok")
