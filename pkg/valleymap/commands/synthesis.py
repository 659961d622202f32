"""synth-landscape and simulate-map."""

from pathlib import Path
from typing import List

import structlog

from ..config import RunConfig
from ..datasets import read_landscape, write_landscape, write_map
from ..landscape import synthesize_landscape
from ..simulate import simulate_dqd_scan, simulate_shuttle_map, simulate_tau_resolved
from .results import CommandResult, require_path, require_seed, stream_seed

logger = structlog.get_logger(__name__)

NS = 1e-9


def synth_landscape(config: RunConfig, output_dir: Path) -> CommandResult:
    """Draw a landscape from ``config.landscape`` with the run seed."""
    seed = require_seed(config, "synthesize a landscape")
    landscape = synthesize_landscape(config.landscape, seed)
    outputs = write_landscape(landscape, output_dir)
    E_VS = landscape.E_VS_grid
    return CommandResult(
        outputs=outputs,
        inputs=[],
        summary={
            "shape": list(landscape.shape),
            "E_VS_mean": float(E_VS.mean()),
            "E_VS_min": float(E_VS.min()),
            "E_VS_max": float(E_VS.max()),
        },
    )


def simulate_map(config: RunConfig, output_dir: Path) -> CommandResult:
    """Static-dot, shuttle or wait-resolved maps, one file per trace."""
    sim = config.simulate
    noise = config.seeded_noise()
    if noise.shots is not None and noise.seed is None:
        require_seed(config, "draw shot noise")
    B = sim.B.values()
    outputs: List[Path] = []
    inputs: List[Path] = []

    if sim.mode == "dqd":
        tau = [t * NS for t in sim.tau_ns.values()]
        scan = simulate_dqd_scan(config.dqd, B, tau, noise)
        outputs += write_map(scan, output_dir / "map_dqd.csv")
        return CommandResult(outputs=outputs, inputs=inputs, summary={"mode": sim.mode, "maps": 1})

    landscape_path = require_path(config.landscape_path, "landscape file")
    inputs.append(landscape_path)
    landscape = read_landscape(landscape_path)
    timeline = config.timeline.to_timeline()
    d = sim.d.values()
    max_step = sim.max_step_ns * NS
    for k, y_offset in enumerate(sim.y_offsets):
        trace_noise = noise if noise.seed is None else noise.model_copy(update={"seed": stream_seed(noise.seed, k)})
        if sim.mode == "shuttle":
            scan = simulate_shuttle_map(
                landscape, d, B, timeline, trace_noise, y_offset, config.dqd, config.waveform, max_step
            )
            outputs += write_map(scan, output_dir / f"map_{k:02d}.csv")
        else:
            maps = simulate_tau_resolved(
                landscape,
                d,
                [t * NS for t in sim.tau_w_ns],
                B,
                timeline,
                trace_noise,
                y_offset,
                config.dqd,
                config.waveform,
                max_step,
            )
            for m, scan in enumerate(maps):
                outputs += write_map(scan, output_dir / f"tau_map_{k:02d}_{m:03d}.csv")

    n_maps = sum(1 for path in outputs if path.suffix == ".csv")
    logger.info("Maps written", mode=sim.mode, maps=n_maps, traces=len(sim.y_offsets))
    return CommandResult(
        outputs=outputs,
        inputs=inputs,
        summary={"mode": sim.mode, "maps": n_maps, "y_offsets": list(sim.y_offsets)},
    )
