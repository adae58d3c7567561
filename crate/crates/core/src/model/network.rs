use super::decoder::{sequence_forward, RowDecoder};
use super::encoder;
use super::params::{into_gradient_set, ModelParams};
use crate::data::{build_features, LagConfig, Panel, WindowBatch};
use crate::error::{Error, Result};
use crate::metric::weighted_log_mse;
use crate::nn::{GradientSet, Tensor};

/// A 16-day forecast in log space and in units.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// `[rows, HORIZON]`
    pub values_log: Tensor,
    /// `max(0, exp(values_log) - 1)`
    pub values_units: Tensor,
}

impl Forecast {
    pub fn from_log(values_log: Tensor) -> Self {
        let values_units = values_log.map(|v| v.exp_m1().max(0.0));
        Self {
            values_log,
            values_units,
        }
    }
}

impl ModelParams {
    fn check_encoder_inputs(&self, x: &Tensor) -> Result<()> {
        let c = &self.config;
        if x.rank() != 3 || x.dim(1) != c.encoder_channels || x.dim(2) != c.encoder_len {
            return Err(Error::invalid(format!(
                "encoder inputs {:?}, expected [B, {}, {}]",
                x.shape(),
                c.encoder_channels,
                c.encoder_len
            )));
        }
        Ok(())
    }

    fn check_decoder_covariates(&self, cov: &Tensor, rows: usize) -> Result<()> {
        let c = &self.config;
        if cov.shape() != [rows, c.decoder_channels, c.horizon] {
            return Err(Error::invalid(format!(
                "decoder covariates {:?}, expected [{rows}, {}, {}]",
                cov.shape(),
                c.decoder_channels,
                c.horizon
            )));
        }
        Ok(())
    }

    fn encode_row(&self, x: &[f64]) -> (Vec<f64>, encoder::EncoderCache) {
        encoder::forward(
            &self.encoder,
            x,
            self.config.encoder_channels,
            self.config.receptive_field(),
        )
    }

    fn decoder_input(&self, prev: f64, cov: &[f64], t: usize) -> Vec<f64> {
        let h = self.config.horizon;
        let mut u = Vec::with_capacity(self.config.decoder_inputs());
        u.push(prev);
        u.extend((0..self.config.decoder_channels).map(|c| cov[c * h + t]));
        u
    }
}

/// Context vectors `[B, channels]` for encoder inputs `[B, C_enc, T_enc]`.
pub fn encode(params: &ModelParams, encoder_inputs: &Tensor) -> Result<Tensor> {
    params.check_encoder_inputs(encoder_inputs)?;
    let b = encoder_inputs.dim(0);
    let mut out = Vec::with_capacity(b * params.config.channels);
    for i in 0..b {
        out.extend(params.encode_row(encoder_inputs.row(i)).0);
    }
    Tensor::from_vec(&[b, params.config.channels], out)
}

/// Incremental decoder state for a batch; create with [`DecoderState::new`]
/// and initialize with [`DecoderState::reset`] before each forecast.
#[derive(Debug, Clone, Default)]
pub struct DecoderState {
    rows: Vec<RowDecoder>,
}

impl DecoderState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self, params: &ModelParams, context: &Tensor) -> Result<()> {
        if context.rank() != 2 || context.dim(1) != params.config.channels {
            return Err(Error::invalid(format!(
                "context shape {:?}, expected [B, {}]",
                context.shape(),
                params.config.channels
            )));
        }
        self.rows = (0..context.dim(0))
            .map(|i| RowDecoder::new(&params.decoder, context.row(i).to_vec(), params.config.horizon))
            .collect();
        Ok(())
    }

    pub fn is_initialized(&self) -> bool {
        !self.rows.is_empty()
    }

    pub fn steps_taken(&self) -> usize {
        self.rows.first().map_or(0, |r| r.step)
    }
}

/// One decoder step for every row: `prev_log_value: [B]`,
/// `covariates_t: [B, C_dec]`, returns `[B]`.
pub fn decode_step(
    params: &ModelParams,
    state: &mut DecoderState,
    prev_log_value: &Tensor,
    covariates_t: &Tensor,
) -> Result<Tensor> {
    if !state.is_initialized() {
        return Err(Error::invalid("decoder state used before reset"));
    }
    let b = state.rows.len();
    if prev_log_value.shape() != [b] || covariates_t.shape() != [b, params.config.decoder_channels] {
        return Err(Error::invalid(format!(
            "decode_step inputs {:?}/{:?} do not match {b} rows",
            prev_log_value.shape(),
            covariates_t.shape()
        )));
    }
    if state.rows[0].step >= state.rows[0].capacity() {
        return Err(Error::invalid("decoder state has already produced a full horizon"));
    }
    let mut out = Vec::with_capacity(b);
    for (i, row) in state.rows.iter_mut().enumerate() {
        let mut u = vec![prev_log_value.data()[i]];
        u.extend_from_slice(covariates_t.row(i));
        out.push(row.step(&params.decoder, &u));
    }
    Tensor::from_vec(&[b], out)
}

/// Full-sequence decoder pass over fixed inputs `[B, 1 + C_dec, H]`
/// (teacher forcing), returning `[B, H]`.
pub fn decode_sequence(params: &ModelParams, context: &Tensor, decoder_inputs: &Tensor) -> Result<Tensor> {
    let c = &params.config;
    let b = context.dim(0);
    if decoder_inputs.shape() != [b, c.decoder_inputs(), c.horizon] || context.shape() != [b, c.channels] {
        return Err(Error::invalid(format!(
            "decode_sequence inputs {:?}/{:?} do not match config",
            context.shape(),
            decoder_inputs.shape()
        )));
    }
    let mut out = Vec::with_capacity(b * c.horizon);
    for i in 0..b {
        let u = Tensor::from_vec(&[c.decoder_inputs(), c.horizon], decoder_inputs.row(i).to_vec())?;
        out.extend(sequence_forward(&params.decoder, context.row(i), &u));
    }
    Tensor::from_vec(&[b, c.horizon], out)
}

/// Encode, then `horizon` autoregressive decoder steps seeded with the last
/// observed sales value (encoder channel 0 at the final position).
pub fn forecast_16(params: &ModelParams, encoder_inputs: &Tensor, decoder_covariates: &Tensor) -> Result<Forecast> {
    params.check_encoder_inputs(encoder_inputs)?;
    let b = encoder_inputs.dim(0);
    params.check_decoder_covariates(decoder_covariates, b)?;
    let h = params.config.horizon;
    let t_enc = params.config.encoder_len;
    let mut out = Vec::with_capacity(b * h);
    for i in 0..b {
        let x = encoder_inputs.row(i);
        let (context, _) = params.encode_row(x);
        let mut dec = RowDecoder::new(&params.decoder, context, h);
        let cov = decoder_covariates.row(i);
        let mut prev = x[t_enc - 1];
        for t in 0..h {
            prev = dec.step(&params.decoder, &params.decoder_input(prev, cov, t));
            out.push(prev);
        }
    }
    Ok(Forecast::from_log(Tensor::from_vec(&[b, h], out)?))
}

/// Forecasts every series of `panel` for the window starting at
/// `decode_start`.
pub fn forecast_panel(params: &ModelParams, panel: &Panel, decode_start: usize, lags: &LagConfig) -> Result<Forecast> {
    let c = &params.config;
    let s = panel.n_series();
    let mut enc = Vec::with_capacity(s * c.encoder_channels * c.encoder_len);
    let mut dec = Vec::with_capacity(s * c.decoder_channels * c.horizon);
    for i in 0..s {
        let f = build_features(panel, i, decode_start, c.encoder_len, lags)?;
        enc.extend(f.encoder);
        dec.extend(f.decoder);
    }
    forecast_16(
        params,
        &Tensor::from_vec(&[s, c.encoder_channels, c.encoder_len], enc)?,
        &Tensor::from_vec(&[s, c.decoder_channels, c.horizon], dec)?,
    )
}

struct BatchForward {
    pred: Tensor,
    weights: Tensor,
    caches: Vec<(encoder::EncoderCache, RowDecoder)>,
}

fn forward_batch(params: &ModelParams, batch: &WindowBatch) -> Result<BatchForward> {
    params.check_encoder_inputs(&batch.encoder_inputs)?;
    let b = batch.encoder_inputs.dim(0);
    params.check_decoder_covariates(&batch.decoder_covariates, b)?;
    let c = &params.config;
    let h = c.horizon;
    if batch.targets_log.shape() != [b, h] || batch.weights.len() != b {
        return Err(Error::invalid("batch targets or weights do not match batch size"));
    }

    let mut caches = Vec::with_capacity(b);
    let mut preds = Vec::with_capacity(b * h);
    for i in 0..b {
        let x = batch.encoder_inputs.row(i);
        let (context, cache) = params.encode_row(x);
        let mut dec = RowDecoder::new(&params.decoder, context, h);
        let cov = batch.decoder_covariates.row(i);
        let target = batch.targets_log.row(i);
        let mut prev = x[c.encoder_len - 1];
        for t in 0..h {
            let y = dec.step(&params.decoder, &params.decoder_input(prev, cov, t));
            preds.push(y);
            prev = if c.teacher_forcing { target[t] } else { y };
        }
        caches.push((cache, dec));
    }
    Ok(BatchForward {
        pred: Tensor::from_vec(&[b, h], preds)?,
        weights: Tensor::from_vec(
            &[b, h],
            batch.weights.iter().flat_map(|&w| std::iter::repeat_n(w, h)).collect(),
        )?,
        caches,
    })
}

/// Weighted log-space MSE of the 16 decoder outputs and its exact gradient.
///
/// In the default autoregressive mode gradients flow through each fed-back
/// prediction; with `teacher_forcing` the previous target is fed instead.
pub fn model_forward_backward(params: &ModelParams, batch: &WindowBatch) -> Result<(f64, GradientSet)> {
    let fwd = forward_batch(params, batch)?;
    let (loss, g_pred) = weighted_log_mse(&fwd.pred, &batch.targets_log, &fwd.weights)?;
    if !loss.is_finite() {
        return Err(Error::Divergence(format!("non-finite training loss {loss}")));
    }
    let fed_back = !params.config.teacher_forcing;
    let mut enc_grad = params.encoder.zero_grad();
    let mut dec_grad = params.decoder.zero_grad();
    for (i, (cache, dec)) in fwd.caches.iter().enumerate() {
        let g_ctx = dec.backward(&params.decoder, g_pred.row(i), fed_back, &mut dec_grad);
        encoder::backward(&params.encoder, cache, &g_ctx, &mut enc_grad);
    }
    Ok((loss, into_gradient_set(enc_grad, dec_grad)))
}

/// Loss only, same computation graph as [`model_forward_backward`].
pub fn model_loss(params: &ModelParams, batch: &WindowBatch) -> Result<f64> {
    let fwd = forward_batch(params, batch)?;
    Ok(weighted_log_mse(&fwd.pred, &batch.targets_log, &fwd.weights)?.0)
}
