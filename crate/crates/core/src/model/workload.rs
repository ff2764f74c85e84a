use serde::{Deserialize, Serialize};

use super::{LayerKind, LayerSpec, NnSpec};
use crate::error::{Error, Result};

fn one() -> u64 {
    1
}

/// Max/avg pooling folded into the preceding layer's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolDesc {
    pub kernel: u64,
    #[serde(default)]
    pub stride: Option<u64>,
}

/// Structural layer description as found in network JSON files.
///
/// Shapes are `[height, width, channels]`. Padding defaults to `kernel / 2`
/// ("same" for odd kernels at stride 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerDesc {
    Conv {
        name: String,
        input: [u64; 3],
        out_channels: u64,
        kernel: u64,
        #[serde(default = "one")]
        stride: u64,
        #[serde(default)]
        padding: Option<u64>,
        #[serde(default = "one")]
        groups: u64,
        #[serde(default)]
        pool: Option<PoolDesc>,
        #[serde(default)]
        element_bytes: Option<u64>,
    },
    Depthwise {
        name: String,
        input: [u64; 3],
        kernel: u64,
        #[serde(default = "one")]
        stride: u64,
        #[serde(default)]
        padding: Option<u64>,
        #[serde(default)]
        element_bytes: Option<u64>,
    },
    Pointwise {
        name: String,
        input: [u64; 3],
        out_channels: u64,
        #[serde(default)]
        pool: Option<PoolDesc>,
        #[serde(default)]
        element_bytes: Option<u64>,
    },
    Fc {
        name: String,
        in_features: u64,
        out_features: u64,
        #[serde(default)]
        element_bytes: Option<u64>,
    },
    Relu {
        name: String,
        input: [u64; 3],
        #[serde(default)]
        element_bytes: Option<u64>,
    },
    Pool {
        name: String,
        input: [u64; 3],
        kernel: u64,
        #[serde(default)]
        stride: Option<u64>,
        #[serde(default)]
        element_bytes: Option<u64>,
    },
    /// Pre-derived workload, bypassing shape arithmetic.
    Raw(LayerSpec),
}

impl LayerDesc {
    pub fn name(&self) -> &str {
        match self {
            LayerDesc::Conv { name, .. }
            | LayerDesc::Depthwise { name, .. }
            | LayerDesc::Pointwise { name, .. }
            | LayerDesc::Fc { name, .. }
            | LayerDesc::Relu { name, .. }
            | LayerDesc::Pool { name, .. } => name,
            LayerDesc::Raw(spec) => &spec.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub name: String,
    /// Bytes per tensor element; 1 for int8-quantized networks.
    #[serde(default = "one")]
    pub element_bytes: u64,
    pub layers: Vec<LayerDesc>,
}

impl NetworkFile {
    pub fn into_spec(self) -> Result<NnSpec> {
        let layers = self
            .layers
            .iter()
            .map(|desc| derive_workload_with(desc, self.element_bytes))
            .collect::<Result<Vec<_>>>()?;
        NnSpec::new(self.name, layers)
    }
}

struct Dims<'a> {
    layer: &'a str,
}

impl Dims<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::InvalidLayer {
            layer: self.layer.to_string(),
            reason: reason.into(),
        }
    }

    fn positive(&self, what: &str, v: u64) -> Result<u64> {
        if v == 0 {
            Err(self.err(format!("{what} must be positive")))
        } else {
            Ok(v)
        }
    }

    fn shape(&self, s: [u64; 3]) -> Result<[u64; 3]> {
        for (v, what) in s.iter().zip(["height", "width", "channels"]) {
            self.positive(what, *v)?;
        }
        Ok(s)
    }

    /// Output extent of a sliding window.
    fn window(&self, extent: u64, kernel: u64, stride: u64, padding: u64) -> Result<u64> {
        let padded = extent + 2 * padding;
        if padded < kernel {
            return Err(self.err(format!(
                "kernel {kernel} larger than padded extent {padded}"
            )));
        }
        Ok((padded - kernel) / stride + 1)
    }

    fn pooled(&self, h: u64, w: u64, pool: Option<PoolDesc>) -> Result<(u64, u64, u64)> {
        match pool {
            None => Ok((h, w, 1)),
            Some(p) => {
                let k = self.positive("pool kernel", p.kernel)?;
                let s = self.positive("pool stride", p.stride.unwrap_or(k))?;
                Ok((self.window(h, k, s, 0)?, self.window(w, k, s, 0)?, k * k))
            }
        }
    }
}

/// Derive a layer's workload using the element width of its network (1 byte
/// unless overridden on the layer).
pub fn derive_workload(desc: &LayerDesc) -> Result<LayerSpec> {
    derive_workload_with(desc, 1)
}

fn derive_workload_with(desc: &LayerDesc, default_elem: u64) -> Result<LayerSpec> {
    let d = Dims { layer: desc.name() };
    let elem = |e: &Option<u64>| d.positive("element_bytes", e.unwrap_or(default_elem));
    let spec = match desc {
        LayerDesc::Conv {
            name,
            input,
            out_channels,
            kernel,
            stride,
            padding,
            groups,
            pool,
            element_bytes,
        } => {
            let [h, w, cin] = d.shape(*input)?;
            let cout = d.positive("out_channels", *out_channels)?;
            let k = d.positive("kernel", *kernel)?;
            let s = d.positive("stride", *stride)?;
            let g = d.positive("groups", *groups)?;
            if cin % g != 0 || cout % g != 0 {
                return Err(d.err(format!("groups {g} must divide both channel counts")));
            }
            let e = elem(element_bytes)?;
            let p = padding.unwrap_or(k / 2);
            let (ho, wo) = (d.window(h, k, s, p)?, d.window(w, k, s, p)?);
            let macs = k * k * (cin / g) * cout * ho * wo;
            let (hp, wp, window) = d.pooled(ho, wo, *pool)?;
            let pool_ops = if pool.is_some() {
                window * hp * wp * cout
            } else {
                0
            };
            LayerSpec {
                name: name.clone(),
                kind: if k == 1 && g == 1 {
                    LayerKind::PointwiseConv
                } else {
                    LayerKind::Conv
                },
                input_bytes: h * w * cin * e,
                weight_bytes: k * k * (cin / g) * cout * e,
                output_bytes: hp * wp * cout * e,
                ops: 2 * macs + pool_ops,
            }
        }
        LayerDesc::Depthwise {
            name,
            input,
            kernel,
            stride,
            padding,
            element_bytes,
        } => {
            let [h, w, c] = d.shape(*input)?;
            let k = d.positive("kernel", *kernel)?;
            let s = d.positive("stride", *stride)?;
            let e = elem(element_bytes)?;
            let p = padding.unwrap_or(k / 2);
            let (ho, wo) = (d.window(h, k, s, p)?, d.window(w, k, s, p)?);
            LayerSpec {
                name: name.clone(),
                kind: LayerKind::DepthwiseConv,
                input_bytes: h * w * c * e,
                weight_bytes: k * k * c * e,
                output_bytes: ho * wo * c * e,
                ops: 2 * k * k * c * ho * wo,
            }
        }
        LayerDesc::Pointwise {
            name,
            input,
            out_channels,
            pool,
            element_bytes,
        } => {
            let [h, w, cin] = d.shape(*input)?;
            let cout = d.positive("out_channels", *out_channels)?;
            let e = elem(element_bytes)?;
            let (hp, wp, window) = d.pooled(h, w, *pool)?;
            let pool_ops = if pool.is_some() {
                window * hp * wp * cout
            } else {
                0
            };
            LayerSpec {
                name: name.clone(),
                kind: LayerKind::PointwiseConv,
                input_bytes: h * w * cin * e,
                weight_bytes: cin * cout * e,
                output_bytes: hp * wp * cout * e,
                ops: 2 * cin * cout * h * w + pool_ops,
            }
        }
        LayerDesc::Fc {
            name,
            in_features,
            out_features,
            element_bytes,
        } => {
            let i = d.positive("in_features", *in_features)?;
            let o = d.positive("out_features", *out_features)?;
            let e = elem(element_bytes)?;
            LayerSpec {
                name: name.clone(),
                kind: LayerKind::FullyConnected,
                input_bytes: i * e,
                weight_bytes: i * o * e,
                output_bytes: o * e,
                ops: 2 * i * o,
            }
        }
        LayerDesc::Relu {
            name,
            input,
            element_bytes,
        } => {
            let [h, w, c] = d.shape(*input)?;
            let e = elem(element_bytes)?;
            LayerSpec {
                name: name.clone(),
                kind: LayerKind::ReLU,
                input_bytes: h * w * c * e,
                weight_bytes: 0,
                output_bytes: h * w * c * e,
                ops: h * w * c,
            }
        }
        LayerDesc::Pool {
            name,
            input,
            kernel,
            stride,
            element_bytes,
        } => {
            let [h, w, c] = d.shape(*input)?;
            let e = elem(element_bytes)?;
            let (hp, wp, window) = d.pooled(
                h,
                w,
                Some(PoolDesc {
                    kernel: *kernel,
                    stride: *stride,
                }),
            )?;
            LayerSpec {
                name: name.clone(),
                kind: LayerKind::Pool,
                input_bytes: h * w * c * e,
                weight_bytes: 0,
                output_bytes: hp * wp * c * e,
                ops: window * hp * wp * c,
            }
        }
        LayerDesc::Raw(spec) => spec.clone(),
    };
    spec.validate()?;
    Ok(spec)
}
