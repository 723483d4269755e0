"""Linear sketches for dynamic graph streams and a single-pass approximate matching pipeline."""

__version__ = "0.1.0"

from .algebra import HashFamily, KWiseHash, PrimeField, hash_eval, hash_new, smallest_prime_gt
from .matching import matching_oracle, max_matching, validate_matching
from .mos import MOSSketch, mos_build, mos_recover
from .neighborhood import NECounter, NESampler, NETester
from .pipeline import MatchingReport, ParityStore, Pipeline, PipelineConfig, pipeline_build, pipeline_recover
from .recovery import FqSparseRecovery, L0Bank, L0Sampler
from .snr import ExhaustiveSNR, SNRecoverySketch, snr_recover
from .sparsify import SparsifySketch, regular_graph, sparsify_build, sparsify_recover
from .stream import BitMeter, LinearSketch, Stream, StreamUpdate, feed, measure, merge, parse_stream, read_stream

__all__ = [
    "BitMeter", "ExhaustiveSNR", "FqSparseRecovery", "HashFamily", "KWiseHash", "L0Bank", "L0Sampler",
    "LinearSketch", "MOSSketch", "MatchingReport", "NECounter", "NESampler", "NETester", "ParityStore",
    "Pipeline", "PipelineConfig", "PrimeField", "SNRecoverySketch", "SparsifySketch", "Stream", "StreamUpdate",
    "feed", "hash_eval", "hash_new", "matching_oracle", "max_matching", "measure", "merge", "mos_build",
    "mos_recover", "parse_stream", "pipeline_build", "pipeline_recover", "read_stream", "regular_graph",
    "smallest_prime_gt", "snr_recover", "sparsify_build", "sparsify_recover", "validate_matching",
]
