"""Artifact removal for single-channel time series: a denoising autoencoder with correlation-guided rescaling."""
