"""Tiny random CLIPModel -> archive plus reference outputs for parity tests."""
import argparse
import json
import math
from pathlib import Path

import numpy as np
import torch
from transformers import CLIPConfig, CLIPModel

from convert_clip import convert, write_archive


def fixture_image():
    # Deterministic RGB image, CHW, values in roughly [-2, 2].
    c, y, x = np.meshgrid(np.arange(3), np.arange(224), np.arange(224), indexing="ij")
    return 2.0 * np.sin(0.013 * x + 0.029 * y + 1.7 * c) * np.cos(0.007 * x * (c + 1) - 0.011 * y)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", required=True)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(0)
    cfg = CLIPConfig(
        text_config={"vocab_size": 64, "hidden_size": 16, "intermediate_size": 64, "num_hidden_layers": 2,
                     "num_attention_heads": 2, "max_position_embeddings": 16, "eos_token_id": 63,
                     "bos_token_id": 62, "pad_token_id": 0},
        vision_config={"hidden_size": 16, "intermediate_size": 64, "num_hidden_layers": 2,
                       "num_attention_heads": 2, "image_size": 224, "patch_size": 32},
        projection_dim=12,
    )
    model = CLIPModel(cfg).double().eval()
    # Random init leaves LayerNorms at identity; perturb them so they are exercised.
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "norm" in name or "layrnorm" in name:
                p.add_(0.1 * torch.randn_like(p))

    tensors, meta = convert(model)
    write_archive(out / "tiny_clip.caer", tensors, meta, "f64")

    image = torch.from_numpy(fixture_image())[None]
    token_sets = [[62, 5, 17, 33, 63], [62, 40, 2, 9, 9, 11, 63]]
    with torch.no_grad():
        img = model.get_image_features(pixel_values=image)
        if not torch.is_tensor(img):
            img = img.pooler_output
        txt = []
        for ids in token_sets:
            t = model.get_text_features(input_ids=torch.tensor([ids]))
            if not torch.is_tensor(t):
                t = t.pooler_output
            txt.append(t[0].tolist())
    ref = {"image_features": img[0].tolist(), "token_sets": token_sets, "text_features": txt}
    (out / "tiny_clip_reference.json").write_text(json.dumps(ref, indent=1) + "\n")


if __name__ == "__main__":
    main()
