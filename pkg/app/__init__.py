"""Bee-identification error exponents toolkit"""
