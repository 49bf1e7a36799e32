#!/usr/bin/env python3
"""Write VGG16 LPIPS weights in the binary "LPIP" format read by jscc.

    python3 tools/export_lpips_vgg.py out.bin            # needs the `lpips` package
    python3 tools/export_lpips_vgg.py out.bin --random   # untrained weights, for format tests

Pass the output file to the CLI with --lpips-weights.
"""

import argparse
import struct

import torch
import torchvision

# Input whitening of the LPIPS scaling layer, applied after mapping to [-1, 1].
SHIFT = (-0.030, -0.088, -0.188)
SCALE = (0.458, 0.448, 0.450)
# Indices of the convolutions whose ReLU outputs feed the distance.
TAPS = {2, 7, 14, 21, 28}
# Features up to relu5_3; the final max-pool is unused.
LAST = 29


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out")
    ap.add_argument("--random", action="store_true", help="untrained VGG and unit lin weights")
    args = ap.parse_args()

    if args.random:
        torch.manual_seed(0)
        features = torchvision.models.vgg16(weights=None).features
        lins = None
    else:
        import lpips

        model = lpips.LPIPS(net="vgg", verbose=False)
        features = torchvision.models.vgg16(weights="IMAGENET1K_V1").features
        lins = [lin.model[-1].weight.detach().flatten() for lin in (model.lin0, model.lin1, model.lin2, model.lin3, model.lin4)]

    stages = []
    tap = 0
    for i, layer in enumerate(features[: LAST + 1]):
        if isinstance(layer, torch.nn.MaxPool2d):
            stages.append(("pool",))
        elif isinstance(layer, torch.nn.Conv2d):
            lin = None
            if i in TAPS:
                lin = torch.ones(layer.out_channels) if lins is None else lins[tap]
                tap += 1
            stages.append(("conv", layer, lin))

    with open(args.out, "wb") as f:
        f.write(b"LPIP")
        f.write(struct.pack("<II", 1, len(stages)))
        f.write(struct.pack("<3f", *SHIFT))
        f.write(struct.pack("<3f", *SCALE))
        for st in stages:
            if st[0] == "pool":
                f.write(struct.pack("<I", 1))
                continue
            _, conv, lin = st
            f.write(struct.pack("<IIII", 0, conv.in_channels, conv.out_channels, int(lin is not None)))
            f.write(conv.weight.detach().float().contiguous().numpy().astype("<f4").tobytes())
            f.write(conv.bias.detach().float().numpy().astype("<f4").tobytes())
            if lin is not None:
                f.write(lin.float().numpy().astype("<f4").tobytes())


if __name__ == "__main__":
    main()
