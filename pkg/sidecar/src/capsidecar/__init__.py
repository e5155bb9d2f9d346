"""Inference sidecar: an HTTP service hosting model backends behind the
wire protocol the caption-augmentation pipeline speaks.

The service itself is model-agnostic plumbing. Which model answers each
role is deployment configuration (an EndpointRegistry); the wire schemas
are the contract.
"""

__version__ = "0.1.0"
