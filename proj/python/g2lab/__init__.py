"""Python bindings of the g2lab photon-statistics simulator.

Times are integer picoseconds; stream events are numpy uint64 arrays.
"""

from ._g2lab import (
    ClickStream,
    DetectorParams,
    G2LabError,
    G2Model,
    PhotonStream,
    ThreeLevelParams,
    __version__,
    analytic_g2,
    beam_splitter,
    correlate,
    correlate_cross,
    detect,
    detector_preset,
    fit_g2_csv,
    read_stream,
    run_pipeline,
    simulate_fock,
    simulate_poisson,
    simulate_three_level,
    steady_state_excited,
    write_stream,
)

PS_PER_NS = 1_000
PS_PER_S = 1_000_000_000_000

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
