#!/usr/bin/env python3
# Copyright 2026 The avgen Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Encoder-decoder runner for the avgen external backend.

  seq2seq_runner.py train    --workdir W
  seq2seq_runner.py generate --model M --config C --in S --out O

`model_id` is any Hugging Face seq2seq checkpoint id or local directory.
The id "local-tiny-t5" builds a small randomly initialised T5 with a
whitespace word-level vocabulary fitted on the training corpus; it needs no
download and exists to exercise the adapter end to end.
"""

import argparse
import json
import os
import random
import sys

import torch
from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

TINY_MODEL = "local-tiny-t5"


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def seed_everything(seed):
    random.seed(seed)
    torch.manual_seed(seed)


def build_tiny(examples, special_tokens):
    from tokenizers import Tokenizer, models, pre_tokenizers, processors
    from transformers import PreTrainedTokenizerFast, T5Config, T5ForConditionalGeneration

    specials = ["<pad>", "</s>", "<unk>"] + [t for t in special_tokens if t not in ("<pad>", "</s>", "<unk>")]
    vocab = {tok: i for i, tok in enumerate(specials)}
    for e in examples:
        for word in (e["source"] + " " + e["target"]).split():
            vocab.setdefault(word, len(vocab))
    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tok.post_processor = processors.TemplateProcessing(single="$A </s>", special_tokens=[("</s>", 1)])
    tokenizer = PreTrainedTokenizerFast(tokenizer_object=tok, pad_token="<pad>", eos_token="</s>",
                                        unk_token="<unk>", additional_special_tokens=specials[3:])
    config = T5Config(vocab_size=len(vocab), d_model=64, d_ff=128, d_kv=16, num_layers=2, num_heads=4,
                      decoder_start_token_id=0, pad_token_id=0, eos_token_id=1)
    return tokenizer, T5ForConditionalGeneration(config)


def load_pretrained(model_id, special_tokens):
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = AutoModelForSeq2SeqLM.from_pretrained(model_id)
    missing = [t for t in special_tokens if t not in tokenizer.get_vocab()]
    if missing:
        tokenizer.add_special_tokens({"additional_special_tokens": missing})
        model.resize_token_embeddings(len(tokenizer))
    return tokenizer, model


def encode(tokenizer, sources, targets, cfg):
    enc = tokenizer(sources, max_length=cfg["max_input_tokens"], truncation=True, padding=True,
                    return_tensors="pt")
    labels = tokenizer(targets, max_length=cfg["max_output_tokens"], truncation=True, padding=True,
                       return_tensors="pt").input_ids
    labels[labels == tokenizer.pad_token_id] = -100
    enc["labels"] = labels
    return enc


def mean_loss(model, tokenizer, examples, cfg):
    model.eval()
    total, batches = 0.0, 0
    with torch.no_grad():
        for i in range(0, len(examples), cfg["batch_size"]):
            chunk = examples[i:i + cfg["batch_size"]]
            batch = encode(tokenizer, [e["source"] for e in chunk], [e["target"] for e in chunk], cfg)
            total += model(**batch).loss.item()
            batches += 1
    return total / max(batches, 1)


def train(args):
    work = args.workdir
    with open(os.path.join(work, "config.json"), encoding="utf-8") as f:
        cfg = json.load(f)
    examples = read_jsonl(os.path.join(work, "train.jsonl"))
    val = read_jsonl(os.path.join(work, "val.jsonl"))
    seed_everything(cfg["seed"])
    if cfg["model_id"] == TINY_MODEL:
        tokenizer, model = build_tiny(examples + val, cfg["special_tokens"])
    else:
        tokenizer, model = load_pretrained(cfg["model_id"], cfg["special_tokens"])

    truncated = sum(1 for e in examples
                    if len(tokenizer(e["source"]).input_ids) > cfg["max_input_tokens"])
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg["learning_rate"],
                                 betas=(cfg["optimizer"]["beta1"], cfg["optimizer"]["beta2"]),
                                 eps=cfg["optimizer"]["eps"])
    rng = random.Random(cfg["seed"])
    out_dir = os.path.join(work, "model")
    best, stale, epochs_done, losses, stopped = float("inf"), 0, 0, [], False
    for _ in range(cfg["epochs"]):
        model.train()
        order = list(range(len(examples)))
        rng.shuffle(order)  # batches drawn from the mixed pool
        for i in range(0, len(order), cfg["batch_size"]):
            chunk = [examples[j] for j in order[i:i + cfg["batch_size"]]]
            batch = encode(tokenizer, [e["source"] for e in chunk], [e["target"] for e in chunk], cfg)
            loss = model(**batch).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        epochs_done += 1
        if not val:
            model.save_pretrained(out_dir)
            continue
        val_loss = mean_loss(model, tokenizer, val, cfg)
        losses.append(val_loss)
        if val_loss < best:
            best, stale = val_loss, 0
            model.save_pretrained(out_dir)
        else:
            stale += 1
            if stale >= cfg["early_stop_patience"]:
                stopped = epochs_done < cfg["epochs"]
                break
    tokenizer.save_pretrained(out_dir)
    report = {
        "epochs_completed": epochs_done,
        "stopped_early": stopped,
        "truncated_sources": truncated,
        "val_losses": losses,
        "parameter_count": sum(p.numel() for p in model.parameters()),
    }
    with open(os.path.join(work, "report.json"), "w", encoding="utf-8") as f:
        json.dump(report, f)


def generate(args):
    with open(args.config, encoding="utf-8") as f:
        cfg = json.load(f)
    seed_everything(cfg["seed"])
    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = AutoModelForSeq2SeqLM.from_pretrained(args.model)
    model.eval()
    beams = 1
    if cfg["decode"].startswith("beam:"):
        beams = int(cfg["decode"][5:])
    sources = [row["source"] for row in read_jsonl(args.inp)]
    outputs = []
    with torch.no_grad():
        for i in range(0, len(sources), 32):
            enc = tokenizer(sources[i:i + 32], max_length=cfg["max_input_tokens"], truncation=True,
                            padding=True, return_tensors="pt")
            ids = model.generate(**enc, max_new_tokens=cfg["max_output_tokens"], num_beams=beams,
                                 do_sample=False)
            outputs.extend(tokenizer.batch_decode(ids, skip_special_tokens=True))
    with open(args.out, "w", encoding="utf-8") as f:
        for text in outputs:
            f.write(json.dumps({"output": text.strip()}) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    t = sub.add_parser("train")
    t.add_argument("--workdir", required=True)
    g = sub.add_parser("generate")
    g.add_argument("--model", required=True)
    g.add_argument("--config", required=True)
    g.add_argument("--in", dest="inp", required=True)
    g.add_argument("--out", required=True)
    args = parser.parse_args()
    torch.set_num_threads(max(1, min(4, os.cpu_count() or 1)))
    train(args) if args.command == "train" else generate(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
