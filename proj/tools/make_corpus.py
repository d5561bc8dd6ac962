#!/usr/bin/env python3
"""Regenerates the bundled model corpus under corpus/ and corpus-dup/.

The generated JSON files are committed; rerun this script only when
changing the corpus itself.
"""

import json
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def model(name, inputs, layers):
    return {"name": name, "inputs": inputs, "layers": layers}


def layer(lid, op, attrs, inputs):
    return {"id": lid, "op": op, "attrs": attrs, "inputs": inputs}


def conv(lid, inp, ch, k=3, s=1, p=1):
    return layer(lid, "Convolution",
                 {"channels": ch, "kernel": [k, k], "stride": [s, s], "pad": [p, p]},
                 [inp])


def bn(lid, inp):
    return layer(lid, "BatchNorm", {}, [inp])


def act(lid, inp, kind="relu"):
    return layer(lid, "Activation", {"kind": kind}, [inp])


def pool(lid, inp, mode="max", k=2, s=None, p=0):
    s = k if s is None else s
    return layer(lid, "Pooling",
                 {"mode": mode, "kernel": [k, k], "stride": [s, s], "pad": [p, p]},
                 [inp])


def dense(lid, inp, units):
    return layer(lid, "Dense", {"units": units}, [inp])


def chain3():
    return model("chain3", {"data": [1, 8, 32, 32]}, [
        conv("conv", "data", 16),
        act("relu", "conv"),
        layer("softmax", "Softmax", {}, ["relu"]),
    ])


def chain4():
    return model("chain4", {"data": [1, 8, 32, 32]}, [
        conv("a", "data", 16),
        bn("b", "a"),
        act("c", "b"),
        pool("d", "c"),
    ])


def diamond():
    return model("diamond", {"data": [1, 8, 24, 24]}, [
        conv("a", "data", 16),
        conv("b", "a", 16),
        conv("c", "a", 16, k=5, p=2),
        layer("d", "Concat", {"axis": 1}, ["b", "c"]),
    ])


def vgg16_style():
    layers = [
        layer("pad1", "Padding", {"pad": [1, 1]}, ["data"]),
        conv("conv1_1", "pad1", 8, p=0),
        act("relu1_1", "conv1_1"),
        conv("conv1_2", "relu1_1", 8),
        act("relu1_2", "conv1_2"),
        pool("pool1", "relu1_2"),
        layer("pad2", "Padding", {"pad": [1, 1]}, ["pool1"]),
        conv("conv2_1", "pad2", 16, p=0),
        act("relu2_1", "conv2_1"),
        conv("conv2_2", "relu2_1", 16),
        act("relu2_2", "conv2_2"),
        pool("pool2", "relu2_2"),
    ]
    prev = "pool2"
    for b, ch in ((3, 24), (4, 32), (5, 32)):
        for i in (1, 2, 3):
            layers.append(conv(f"conv{b}_{i}", prev, ch))
            layers.append(act(f"relu{b}_{i}", f"conv{b}_{i}"))
            prev = f"relu{b}_{i}"
        layers.append(pool(f"pool{b}", prev))
        prev = f"pool{b}"
    layers += [
        layer("flatten", "Flatten", {}, [prev]),
        dense("fc1", "flatten", 64),
        act("fc1_relu", "fc1"),
        dense("fc2", "fc1_relu", 64),
        act("fc2_relu", "fc2"),
        dense("fc3", "fc2_relu", 10),
        layer("softmax", "Softmax", {}, ["fc3"]),
    ]
    m = model("vgg16_style", {"data": [1, 3, 32, 32]}, layers)
    assert len(layers) == 40, len(layers)
    return m


def resnet_shared(prefix=""):
    # 6-layer prefix shared between the two resnet-block variants
    return [
        conv(prefix + "conv1", "data", 8),
        bn(prefix + "bn1", prefix + "conv1"),
        act(prefix + "act1", prefix + "bn1"),
        conv(prefix + "conv2", prefix + "act1", 8),
        act(prefix + "act2", prefix + "conv2", kind="tanh"),
        pool(prefix + "pool1", prefix + "act2"),
    ]


def resnet_block_a():
    layers = resnet_shared() + [
        conv("conv_a", "pool1", 16),
        act("act_a", "conv_a"),
        layer("flat_a", "Flatten", {}, ["act_a"]),
        dense("dense_a", "flat_a", 16),
    ]
    return model("resnet_block_a", {"data": [1, 4, 24, 24]}, layers)


def resnet_block_b():
    layers = resnet_shared() + [
        conv("conv_b", "pool1", 12),
        act("act_b", "conv_b"),
        pool("pool_b", "act_b", mode="avg"),
        layer("flat_b", "Flatten", {}, ["pool_b"]),
    ]
    return model("resnet_block_b", {"data": [1, 4, 24, 24]}, layers)


def inception_style():
    layers = [
        conv("stem", "data", 8),
        act("stem_relu", "stem"),
    ]

    def module(prefix, inp):
        return [
            conv(f"{prefix}_b1", inp, 8, k=1, p=0),
            conv(f"{prefix}_b2a", inp, 8, k=1, p=0),
            conv(f"{prefix}_b2b", f"{prefix}_b2a", 8),
            pool(f"{prefix}_b3a", inp, k=3, s=1, p=1),
            conv(f"{prefix}_b3b", f"{prefix}_b3a", 8, k=1, p=0),
            layer(f"{prefix}_cat", "Concat", {"axis": 1},
                  [f"{prefix}_b1", f"{prefix}_b2b", f"{prefix}_b3b"]),
        ]

    layers += module("m1", "stem_relu")
    layers += module("m2", "m1_cat")
    layers += [
        pool("gpool", "m2_cat", mode="avg", k=16),
        layer("flatten", "Flatten", {}, ["gpool"]),
        dense("fc", "flatten", 10),
        layer("softmax", "Softmax", {}, ["fc"]),
    ]
    return model("inception_style", {"data": [1, 8, 16, 16]}, layers)


def deep_repetitive():
    layers = [conv("stem", "data", 8)]
    prev = "stem"
    for i in range(342):
        layers.append(conv(f"conv{i}", prev, 8))
        layers.append(bn(f"bn{i}", f"conv{i}"))
        layers.append(act(f"relu{i}", f"bn{i}"))
        prev = f"relu{i}"
    layers += [
        layer("flatten", "Flatten", {}, [prev]),
        layer("softmax", "Softmax", {}, ["flatten"]),
    ]
    m = model("deep_repetitive", {"data": [1, 8, 8, 8]}, layers)
    assert len(layers) == 1029, len(layers)
    return m


def mlp():
    return model("mlp", {"data": [1, 1, 32, 32]}, [
        layer("flatten", "Flatten", {}, ["data"]),
        dense("fc1", "flatten", 256),
        act("relu1", "fc1"),
        dense("fc2", "relu1", 128),
        act("relu2", "fc2"),
        dense("fc3", "relu2", 10),
        layer("softmax", "Softmax", {}, ["fc3"]),
    ])


def convnet_small():
    return model("convnet_small", {"data": [1, 3, 32, 32]}, [
        conv("conv1", "data", 8, k=5, s=2, p=0),
        bn("bn1", "conv1"),
        act("relu1", "bn1"),
        conv("conv2", "relu1", 8),
        bn("bn2", "conv2"),
        act("relu2", "bn2"),
        pool("pool", "relu2"),
        layer("flatten", "Flatten", {}, ["pool"]),
        dense("fc", "flatten", 10),
        layer("softmax", "Softmax", {}, ["fc"]),
    ])


def residual_small():
    return model("residual_small", {"data": [1, 16, 16, 16]}, [
        conv("conv1", "data", 16),
        bn("bn1", "conv1"),
        act("act1", "bn1"),
        conv("conv2", "act1", 16),
        bn("bn2", "conv2"),
        layer("add", "Elementwise", {"op": "add"}, ["act1", "bn2"]),
        act("act2", "add"),
    ])


def pad_pool():
    return model("pad_pool", {"data": [1, 8, 32, 32]}, [
        layer("pad", "Padding", {"pad": [2, 2]}, ["data"]),
        pool("pool1", "pad", mode="avg"),
        conv("conv", "pool1", 16, p=0),
        act("relu", "conv"),
        pool("pool2", "relu"),
        layer("flatten", "Flatten", {}, ["pool2"]),
        dense("fc", "flatten", 32),
        layer("softmax", "Softmax", {}, ["fc"]),
    ])


def dup_model(name, prefix):
    # Every layer signature is distinct within the model, and the layers
    # are convolution-dominated so per-layer timing overhead is noise.
    p = prefix
    return model(name, {"data": [1, 6, 32, 32]}, [
        conv(p + "conv1", "data", 10),
        act(p + "relu1", p + "conv1"),
        conv(p + "conv2", p + "relu1", 12),
        act(p + "relu2", p + "conv2"),
        conv(p + "conv3", p + "relu2", 14),
        conv(p + "conv4", p + "conv3", 16),
        pool(p + "pool", p + "conv4"),
        conv(p + "conv5", p + "pool", 16),
        conv(p + "conv6", p + "conv5", 12),
        layer(p + "flatten", "Flatten", {}, [p + "conv6"]),
        dense(p + "fc", p + "flatten", 10),
        layer(p + "softmax", "Softmax", {}, [p + "fc"]),
    ])


def write(dirname, m):
    path = os.path.join(ROOT, dirname, m["name"] + ".json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(m, f, indent=2)
        f.write("\n")
    print("wrote", path)


def main():
    for m in (chain3(), chain4(), diamond(), vgg16_style(), resnet_block_a(),
              resnet_block_b(), inception_style(), deep_repetitive(), mlp(),
              convnet_small(), residual_small(), pad_pool()):
        write("corpus", m)
    write("corpus-dup", dup_model("dup_base", "a_"))
    write("corpus-dup", dup_model("dup_copy", "b_"))


if __name__ == "__main__":
    main()
