"""Protective-behaviour detection on wearable motion-capture and sEMG time series."""

__version__ = "0.1.0"

SAMPLE_RATE_HZ = 60
N_FEATURES = 30
N_ANGLES = 13
N_ENERGIES = 13
N_EMG = 4
MOCAP_DIM = N_ANGLES + N_ENERGIES
