"""Tests of the oscitrace package."""
