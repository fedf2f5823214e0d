from .diffusion import SamplerConfig, sample
from .layout import SceneSpec, parse_scene
from .services import get_vocabulary

__all__ = ['SamplerConfig', 'SceneSpec', 'get_vocabulary', 'parse_scene', 'sample']
