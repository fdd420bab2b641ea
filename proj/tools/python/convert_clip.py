"""Converts a Hugging Face CLIPModel into the toolkit's tensor archive.

    python convert_clip.py --model openai/clip-vit-base-patch32 --out clip-b32.caer

The archive is read by the C++ encoders through
{"kind": "clip", "archive": PATH}.
"""
import argparse
import json
import struct

import numpy as np

MAGIC = b"CAERARCH"
VERSION = 1


def write_archive(path, tensors, meta, dtype="f64"):
    np_dtype = np.float64 if dtype == "f64" else np.float32
    header = {"meta": meta, "tensors": []}
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype=np_dtype)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        assert arr.ndim == 2, name
        blob = np.ascontiguousarray(arr).tobytes()
        header["tensors"].append({"name": name, "shape": list(arr.shape), "dtype": dtype, "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    text = json.dumps(header, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(text)))
        f.write(text)
        for b in blobs:
            f.write(b)


def _t(x):
    return x.detach().cpu().double().numpy()


def _layers(prefix_out, layers, out):
    for i, layer in enumerate(layers):
        p = f"{prefix_out}.{i}"
        a = layer.self_attn
        out[f"{p}.attn.in_proj.weight"] = np.concatenate(
            [_t(a.q_proj.weight).T, _t(a.k_proj.weight).T, _t(a.v_proj.weight).T], axis=1)
        out[f"{p}.attn.in_proj.bias"] = np.concatenate([_t(a.q_proj.bias), _t(a.k_proj.bias), _t(a.v_proj.bias)])
        out[f"{p}.attn.out_proj.weight"] = _t(a.out_proj.weight).T
        out[f"{p}.attn.out_proj.bias"] = _t(a.out_proj.bias)
        out[f"{p}.ln_1.weight"] = _t(layer.layer_norm1.weight)
        out[f"{p}.ln_1.bias"] = _t(layer.layer_norm1.bias)
        out[f"{p}.ln_2.weight"] = _t(layer.layer_norm2.weight)
        out[f"{p}.ln_2.bias"] = _t(layer.layer_norm2.bias)
        out[f"{p}.mlp.c_fc.weight"] = _t(layer.mlp.fc1.weight).T
        out[f"{p}.mlp.c_fc.bias"] = _t(layer.mlp.fc1.bias)
        out[f"{p}.mlp.c_proj.weight"] = _t(layer.mlp.fc2.weight).T
        out[f"{p}.mlp.c_proj.bias"] = _t(layer.mlp.fc2.bias)


def convert(model):
    vc = model.config.vision_config
    tc = model.config.text_config
    if vc.intermediate_size != 4 * vc.hidden_size or tc.intermediate_size != 4 * tc.hidden_size:
        raise SystemExit("only MLP ratio 4 is supported")
    if vc.hidden_act != tc.hidden_act or vc.hidden_act not in ("quick_gelu", "gelu"):
        raise SystemExit(f"unsupported activation {vc.hidden_act}/{tc.hidden_act}")
    v = model.vision_model
    t = model.text_model
    out = {}
    w = _t(v.embeddings.patch_embedding.weight)  # hidden, 3, p, p
    out["visual.patch_embed"] = w.reshape(w.shape[0], -1).T
    out["visual.class_embedding"] = _t(v.embeddings.class_embedding)
    out["visual.positional_embedding"] = _t(v.embeddings.position_embedding.weight)
    out["visual.ln_pre.weight"] = _t(v.pre_layrnorm.weight)
    out["visual.ln_pre.bias"] = _t(v.pre_layrnorm.bias)
    _layers("visual.transformer", v.encoder.layers, out)
    out["visual.ln_post.weight"] = _t(v.post_layernorm.weight)
    out["visual.ln_post.bias"] = _t(v.post_layernorm.bias)
    out["visual.proj"] = _t(model.visual_projection.weight).T

    out["text.token_embedding"] = _t(t.embeddings.token_embedding.weight)
    out["text.positional_embedding"] = _t(t.embeddings.position_embedding.weight)
    _layers("text.transformer", t.encoder.layers, out)
    out["text.ln_final.weight"] = _t(t.final_layer_norm.weight)
    out["text.ln_final.bias"] = _t(t.final_layer_norm.bias)
    out["text.text_projection"] = _t(model.text_projection.weight).T

    meta = {
        "source": "hf-clip",
        "activation": vc.hidden_act,
        "visual": {"width": vc.hidden_size, "layers": vc.num_hidden_layers, "heads": vc.num_attention_heads,
                   "patch_size": vc.patch_size, "image_size": vc.image_size, "dim": model.config.projection_dim},
        "text": {"width": tc.hidden_size, "layers": tc.num_hidden_layers, "heads": tc.num_attention_heads,
                 "context_length": tc.max_position_embeddings, "vocab": tc.vocab_size,
                 "dim": model.config.projection_dim},
    }
    return out, meta


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", required=True, help="HF model id or local directory")
    ap.add_argument("--out", required=True)
    ap.add_argument("--dtype", choices=["f32", "f64"], default="f32")
    args = ap.parse_args()
    from transformers import CLIPModel

    model = CLIPModel.from_pretrained(args.model).eval()
    tensors, meta = convert(model)
    write_archive(args.out, tensors, meta, args.dtype)


if __name__ == "__main__":
    main()
