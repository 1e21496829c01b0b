"""The 1-D model space, radial profiles and Rayleigh quotients."""
