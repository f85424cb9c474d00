//! Camera rig file: a JSON array of pinhole views.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::CameraView;

#[derive(Serialize, Deserialize)]
struct CameraRecord {
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    /// 16 numbers, row-major.
    world_to_camera: Vec<f64>,
}

pub fn load_camera_rig(path: impl AsRef<Path>) -> Result<Vec<CameraView>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let records: Vec<CameraRecord> =
        serde_json::from_str(&text).map_err(|e| Error::CameraRig(e.to_string()))?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.world_to_camera.len() != 16 {
                return Err(Error::CameraRig(format!(
                    "camera {i}: world_to_camera has {} entries, expected 16",
                    r.world_to_camera.len()
                )));
            }
            let cam = CameraView {
                width: r.width,
                height: r.height,
                fx: r.fx,
                fy: r.fy,
                cx: r.cx,
                cy: r.cy,
                world_to_camera: nalgebra::Matrix4::from_row_slice(&r.world_to_camera),
            };
            cam.validate()
                .map_err(|e| Error::CameraRig(format!("camera {i}: {e}")))?;
            Ok(cam)
        })
        .collect()
}

pub fn save_camera_rig(cams: &[CameraView], path: impl AsRef<Path>) -> Result<()> {
    let records: Vec<CameraRecord> = cams
        .iter()
        .map(|c| CameraRecord {
            width: c.width,
            height: c.height,
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            world_to_camera: c.world_to_camera.transpose().as_slice().to_vec(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&records).map_err(|e| Error::CameraRig(e.to_string()))?;
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;

    #[test]
    fn rig_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cam = CameraView {
            width: 640,
            height: 480,
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            world_to_camera: Matrix4::identity(),
        };
        let path = dir.path().join("rig.json");
        save_camera_rig(std::slice::from_ref(&cam), &path).unwrap();
        let rig = load_camera_rig(&path).unwrap();
        assert_eq!(rig.len(), 1);
        assert_eq!(rig[0], cam);
    }

    #[test]
    fn non_orthonormal_rotation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Matrix4::identity();
        m[(0, 0)] = 2.0;
        let cam = CameraView {
            width: 64,
            height: 64,
            fx: 50.0,
            fy: 50.0,
            cx: 32.0,
            cy: 32.0,
            world_to_camera: m,
        };
        let path = dir.path().join("bad.json");
        save_camera_rig(&[cam], &path).unwrap();
        assert!(load_camera_rig(&path).is_err());
    }
}
