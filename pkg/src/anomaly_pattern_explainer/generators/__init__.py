"""
Dataset generators
"""
from .synthetic import PlantedPack, SynthConfig, generate_synthetic

__all__ = ['PlantedPack', 'SynthConfig', 'generate_synthetic']
