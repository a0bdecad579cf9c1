from .events import Event, EventKind, EventQueue
from .report import LatencyReport, write_csv, write_dat
from .sim import (Node, SimConfig, Simulation, Topology, at_height, at_time, load_sim_config, pools_empty,
                  receipts_for, spawn_network)
