use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    avg_pool2, avg_pool2_backward, global_avg_pool, global_avg_pool_backward, relu_backward,
    relu_in_place, Conv3x3, Linear,
};
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Encoder architecture: `conv3x3 -> relu -> avgpool2` per entry of
/// `channels`, global average pooling, an affine map to the representation
/// `h`, then the projection head `affine -> relu -> affine` giving `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub in_channels: usize,
    pub channels: Vec<usize>,
    pub rep_dim: usize,
    pub proj_hidden: usize,
    pub proj_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            in_channels: 3,
            channels: vec![32, 64, 128],
            rep_dim: 256,
            proj_hidden: 256,
            proj_dim: 128,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::param("in_channels", "must be at least 1"));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::param("channels", "need at least one block, all widths >= 1"));
        }
        for (name, v) in [
            ("rep_dim", self.rep_dim),
            ("proj_hidden", self.proj_hidden),
            ("proj_dim", self.proj_dim),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Smallest input side that survives every pooling stage.
    pub fn min_input_size(&self) -> usize {
        1 << self.channels.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<T = f32> {
    pub config: EncoderConfig,
    pub convs: Vec<Conv3x3<T>>,
    pub rep: Linear<T>,
    pub proj_hidden: Linear<T>,
    pub proj_out: Linear<T>,
}

/// Representation `h` (`N x rep_dim`) and projection `z` (`N x proj_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded<T = f32> {
    pub h: Tensor<T>,
    pub z: Tensor<T>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    n: usize,
    /// Spatial size seen by each conv block.
    sizes: Vec<(usize, usize)>,
    cols: Vec<Vec<T>>,
    relu_out: Vec<Vec<T>>,
    pooled: Vec<T>,
    h: Vec<T>,
    hidden: Vec<T>,
}

/// Parameter gradients, in [`EncoderModel::params`] order.
pub type Gradients<T> = Vec<Tensor<T>>;

impl<T: Scalar> EncoderModel<T> {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::with_capacity(config.channels.len());
        let mut cin = config.in_channels;
        for &cout in &config.channels {
            convs.push(Conv3x3::new(&mut rng, cin, cout));
            cin = cout;
        }
        let rep = Linear::new(&mut rng, cin, config.rep_dim);
        let proj_hidden = Linear::new(&mut rng, config.rep_dim, config.proj_hidden);
        let proj_out = Linear::new(&mut rng, config.proj_hidden, config.proj_dim);
        Ok(Self {
            config,
            convs,
            rep,
            proj_hidden,
            proj_out,
        })
    }

    /// Named parameters in a fixed order shared by gradients, optimizer state
    /// and checkpoints.
    pub fn params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, c) in self.convs.iter().enumerate() {
            out.push((format!("conv{i}.weight"), &c.weight));
            out.push((format!("conv{i}.bias"), &c.bias));
        }
        for (name, l) in [
            ("rep", &self.rep),
            ("proj_hidden", &self.proj_hidden),
            ("proj_out", &self.proj_out),
        ] {
            out.push((format!("{name}.weight"), &l.weight));
            out.push((format!("{name}.bias"), &l.bias));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for c in &mut self.convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        for l in [&mut self.rep, &mut self.proj_hidden, &mut self.proj_out] {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zero_grads(&self) -> Gradients<T> {
        self.params()
            .into_iter()
            .map(|(_, t)| Tensor::zeros(t.shape.clone()))
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> EncoderModel<U> {
        let conv = |c: &Conv3x3<T>| Conv3x3 {
            weight: c.weight.cast(),
            bias: c.bias.cast(),
        };
        let lin = |l: &Linear<T>| Linear {
            weight: l.weight.cast(),
            bias: l.bias.cast(),
        };
        EncoderModel {
            config: self.config.clone(),
            convs: self.convs.iter().map(conv).collect(),
            rep: lin(&self.rep),
            proj_hidden: lin(&self.proj_hidden),
            proj_out: lin(&self.proj_out),
        }
    }

    /// FNV-1a over the parameter bit patterns; changes whenever any
    /// parameter changes.
    pub fn checksum(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for (_, t) in self.params() {
            for v in &t.data {
                for b in v.to_f64().to_bits().to_le_bytes() {
                    hash ^= u64::from(b);
                    hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        hash
    }

    fn check_input(&self, views: &Tensor<T>) -> Result<(usize, usize, usize)> {
        if views.shape.len() != 4 {
            return Err(Error::Shape(format!("expected N x C x H x W views, got {:?}", views.shape)));
        }
        let (n, c, h, w) = (views.shape[0], views.shape[1], views.shape[2], views.shape[3]);
        if c != self.config.in_channels {
            return Err(Error::Shape(format!(
                "views have {c} channels, encoder expects {}",
                self.config.in_channels
            )));
        }
        let min = self.config.min_input_size();
        if h < min || w < min {
            return Err(Error::Shape(format!("views are {h}x{w}, encoder needs at least {min}x{min}")));
        }
        Ok((n, h, w))
    }

    /// Forward pass.
    pub fn encode(&self, views: &Tensor<T>) -> Result<Encoded<T>> {
        Ok(self.forward_train(views)?.0)
    }

    /// Forward pass that also keeps what [`EncoderModel::backward`] needs.
    pub fn forward_train(&self, views: &Tensor<T>) -> Result<(Encoded<T>, ForwardCache<T>)> {
        let (n, mut h, mut w) = self.check_input(views)?;
        let mut x = views.data.clone();
        let mut sizes = Vec::with_capacity(self.convs.len());
        let mut cols = Vec::with_capacity(self.convs.len());
        let mut relu_out = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let (mut y, c) = conv.forward(&x, n, h, w);
            relu_in_place(&mut y);
            x = avg_pool2(&y, n * conv.cout(), h, w);
            sizes.push((h, w));
            cols.push(c);
            relu_out.push(y);
            h /= 2;
            w /= 2;
        }
        let last = self.convs.last().map_or(self.config.in_channels, |c| c.cout());
        let pooled = global_avg_pool(&x, n * last, h * w);
        let rep = self.rep.forward(&pooled, n);
        let mut hidden = self.proj_hidden.forward(&rep, n);
        relu_in_place(&mut hidden);
        let z = self.proj_out.forward(&hidden, n);

        let encoded = Encoded {
            h: Tensor {
                shape: vec![n, self.config.rep_dim],
                data: rep.clone(),
            },
            z: Tensor {
                shape: vec![n, self.config.proj_dim],
                data: z,
            },
        };
        let cache = ForwardCache {
            n,
            sizes,
            cols,
            relu_out,
            pooled,
            h: rep,
            hidden,
        };
        Ok((encoded, cache))
    }

    /// Backpropagates `dz = dL/dz` through the projection head and backbone.
    pub fn backward(&self, cache: &ForwardCache<T>, dz: &Tensor<T>) -> Result<Gradients<T>> {
        let n = cache.n;
        if dz.shape != [n, self.config.proj_dim] {
            return Err(Error::Shape(format!(
                "dz shape {:?}, expected [{n}, {}]",
                dz.shape, self.config.proj_dim
            )));
        }
        let mut grads = self.zero_grads();
        let nconv = self.convs.len();
        let head = 2 * nconv;
        let (g_conv, g_head) = grads.split_at_mut(head);
        let [g_rep_w, g_rep_b, g_hid_w, g_hid_b, g_out_w, g_out_b] = g_head else {
            unreachable!("three linear layers");
        };

        let mut d_hidden =
            self.proj_out
                .backward(&dz.data, &cache.hidden, n, &mut g_out_w.data, &mut g_out_b.data);
        relu_backward(&mut d_hidden, &cache.hidden);
        let d_rep = self.proj_hidden.backward(
            &d_hidden,
            &cache.h,
            n,
            &mut g_hid_w.data,
            &mut g_hid_b.data,
        );
        let d_pooled =
            self.rep
                .backward(&d_rep, &cache.pooled, n, &mut g_rep_w.data, &mut g_rep_b.data);

        let (lh, lw) = cache.sizes.last().map_or((0, 0), |&(h, w)| (h / 2, w / 2));
        let mut dx = global_avg_pool_backward(&d_pooled, lh * lw);
        for (i, conv) in self.convs.iter().enumerate().rev() {
            let (h, w) = cache.sizes[i];
            let mut dy = avg_pool2_backward(&dx, n * conv.cout(), h, w);
            relu_backward(&mut dy, &cache.relu_out[i]);
            let (gw, gb) = g_conv[2 * i..2 * i + 2].split_at_mut(1);
            match conv.backward(&dy, &cache.cols[i], n, h, w, &mut gw[0].data, &mut gb[0].data, i > 0) {
                Some(d) => dx = d,
                None => break,
            }
        }
        Ok(grads)
    }
}
