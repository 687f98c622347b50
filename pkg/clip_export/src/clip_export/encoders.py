"""Encoders behind a two-method protocol.

An encoder exposes

    encode_text(prompts: list[str]) -> (n, dim) float32
    encode_image(image: (H, W, 3) float in [0, 1]) -> (dim,) float32

and both outputs are L2-normalized, matching the cosine-similarity
convention the upstream vision-language models are trained with.

Two implementations ship: a deterministic stub that needs no weights
(for tests, fixtures, and plumbing checks; its features carry no
semantic content), and a wrapper over a pretrained checkpoint loaded
through the transformers library. The wrapper applies the checkpoint's
own standard image preprocessing, including its published normalization
statistics; depth maps are replicated to three channels before that.
Install the [clip] extra to use it.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_CHECKPOINT = "openai/clip-vit-base-patch32"


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    return v / n if n > 0.0 else v


class StubEncoder:
    """Deterministic hash-seeded features; no model weights involved."""

    def __init__(self, dim: int = 512):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)

    def _draw(self, material: bytes) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(material).digest()[:8], "little")
        vec = np.random.default_rng(seed).standard_normal(self.dim)
        return _unit(vec).astype(np.float32)

    def encode_text(self, prompts: list[str]) -> np.ndarray:
        return np.stack([self._draw(b"text:" + p.encode("utf-8"))
                         for p in prompts])

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        arr = np.ascontiguousarray(image, dtype=np.float32)
        header = f"image:{arr.shape}:".encode()
        return self._draw(header + arr.tobytes())


class ClipEncoder:
    """Pretrained checkpoint via transformers; heavy imports stay lazy."""

    def __init__(self, checkpoint: str = DEFAULT_CHECKPOINT):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise RuntimeError(
                "encoder checkpoints need the [clip] extra "
                "(pip install clip-export[clip])") from exc
        self.checkpoint = checkpoint
        self._model = CLIPModel.from_pretrained(checkpoint)
        self._model.eval()
        self._processor = CLIPProcessor.from_pretrained(checkpoint)
        self.dim = int(self._model.config.projection_dim)

    def encode_text(self, prompts: list[str]) -> np.ndarray:
        import torch

        batch = self._processor(text=prompts, return_tensors="pt",
                                padding=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**batch)
        out = feats.cpu().numpy().astype(np.float32)
        return np.stack([_unit(row) for row in out])

    def encode_image(self, image: np.ndarray) -> np.ndarray:
        import torch

        eightbit = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
        batch = self._processor(images=eightbit, return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**batch)
        return _unit(feats[0].cpu().numpy().astype(np.float32))


def load_encoder(choice: str, dim: int = 512):
    """Build an encoder: "stub" or a checkpoint name for transformers.

    dim only applies to the stub; checkpoints know their own width.
    """
    if choice == "stub":
        return StubEncoder(dim)
    return ClipEncoder(choice)
