"""Backend contracts and implementations.

A backend bundle provides three callables the orchestrator drives each
iteration:

  generate(layout, prompt_d, prompt_bg, seed) -> (Image, manifest or None)
  detect(image, manifest, categories, confidence) -> DetectionReport
  aesthetic(layout, image) -> float in [0, 1] or None

SimBackend is the deterministic in-process realization; RemoteBackend talks
to a bridge service over the documented wire protocol.
"""

from .sim import (
    Image, RenderManifest, RenderedInstance, SimBackend, SimConfig,
    palette_for, sim_aesthetic, sim_detect, sim_generate,
)
from .remote import (
    LlmCritic, LlmPlanner, RemoteBackend, llm_chat, remote_detect, remote_generate,
)

__all__ = [
    "Image", "RenderManifest", "RenderedInstance", "SimBackend", "SimConfig",
    "palette_for", "sim_aesthetic", "sim_detect", "sim_generate",
    "LlmCritic", "LlmPlanner", "RemoteBackend", "llm_chat",
    "remote_detect", "remote_generate",
]
