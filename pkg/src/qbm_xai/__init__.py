"""Hybrid quantum-classical vs classical Boltzmann-machine classifiers on PCA-reduced
binary MNIST, with gradient saliency, exact Shapley attribution and attribution entropy."""

__version__ = "0.1.0"
