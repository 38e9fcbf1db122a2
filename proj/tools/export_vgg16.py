#!/usr/bin/env python3
"""Export the first four VGG16 convolutions (through relu2_2) as a wmr extractor file.

Usage: export_vgg16.py OUTPUT

Needs torchvision and network access to fetch the ImageNet weights. Prints the
SHA-256 to put in train.extractor.sha256 alongside
"provenance": "pretrained-asset".
"""

import argparse
import hashlib
import struct
import sys

import numpy as np


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("output")
    args = parser.parse_args()

    from torchvision.models import VGG16_Weights, vgg16

    model = vgg16(weights=VGG16_Weights.IMAGENET1K_V1)
    convs = [m for m in model.features if m.__class__.__name__ == "Conv2d"][:4]

    with open(args.output, "wb") as f:
        f.write(b"WMRFX001")
        f.write(struct.pack("<I", len(convs)))
        for conv in convs:
            w = conv.weight.detach().numpy().astype("<f4")
            b = conv.bias.detach().numpy().astype("<f4")
            f.write(struct.pack("<4I", *w.shape))
            f.write(np.ascontiguousarray(w).tobytes())
            f.write(np.ascontiguousarray(b).tobytes())

    with open(args.output, "rb") as f:
        print(hashlib.sha256(f.read()).hexdigest())
    return 0


if __name__ == "__main__":
    sys.exit(main())
