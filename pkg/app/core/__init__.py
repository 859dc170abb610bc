"""Core calculators: exponents, codebooks, channel and decoders"""
