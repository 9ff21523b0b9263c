"""PVT-based labeling, dataset assembly and the stratified split."""
from .labeling import (
    PvtSession,
    SessionLabel,
    label_session,
    label_subjects,
    read_pvt_file,
    write_pvt_file,
    zscore_flags,
)
from .split import load_split_manifest, save_split_manifest, stratified_split, stratified_split_indices
from .table import LabeledDataset, SessionRecording, build_dataset

__all__ = [
    "LabeledDataset", "PvtSession", "SessionLabel", "SessionRecording", "build_dataset",
    "label_session", "label_subjects", "load_split_manifest", "read_pvt_file",
    "save_split_manifest", "stratified_split", "stratified_split_indices", "write_pvt_file",
    "zscore_flags",
]
