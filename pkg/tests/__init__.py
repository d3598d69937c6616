"""Tests for stretchmetrics"""
