"""Continuous subgraph matching over streaming edge updates."""

from streammatch.engine import BatchStats, Engine, EngineError
from streammatch.enumeration import Embedding
from streammatch.matchers import MATCHERS, MatcherSpec, get_matcher
from streammatch.query import QueryGraph, build_plan, load_query, parse_query
from streammatch.stream import SnapshotGenerator, StreamConfig, StreamType, load_events, parse_event

__all__ = [
    "BatchStats",
    "Embedding",
    "Engine",
    "EngineError",
    "MATCHERS",
    "MatcherSpec",
    "QueryGraph",
    "SnapshotGenerator",
    "StreamConfig",
    "StreamType",
    "build_plan",
    "get_matcher",
    "load_events",
    "load_query",
    "parse_event",
    "parse_query",
]

__version__ = "0.1.0"
