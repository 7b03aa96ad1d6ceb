//! Decoding checked against files written by the `image` crate.

use gridcraft::io::{load_image, save_png16, ChannelPolicy};
use gridcraft::{BitDepth, Error, Image};
use image::{ImageBuffer, Luma, Rgb};

fn pattern(x: u32, y: u32, k: u32) -> u32 {
    (x * 7919 + y * 104_729 + k * 31) % 65_536
}

#[test]
fn gray16_png_and_tiff() {
    let dir = tempfile::tempdir().unwrap();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(37, 23, |x, y| Luma([pattern(x, y, 0) as u16]));
    for name in ["g.png", "g.tif"] {
        let path = dir.path().join(name);
        buf.save(&path).unwrap();
        let img: Image = load_image(&path, ChannelPolicy::Gray).unwrap();
        assert_eq!((img.width(), img.height()), (37, 23), "{name}");
        assert_eq!(img.bit_depth(), BitDepth::Sixteen, "{name}");
        for (x, y, p) in buf.enumerate_pixels() {
            assert_eq!(img.get(x as usize, y as usize), f64::from(p[0]), "{name} at ({x}, {y})");
        }
    }
}

#[test]
fn gray8_is_not_rescaled() {
    let dir = tempfile::tempdir().unwrap();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(16, 9, |x, y| Luma([(pattern(x, y, 1) % 256) as u8]));
    for name in ["g8.png", "g8.tif"] {
        let path = dir.path().join(name);
        buf.save(&path).unwrap();
        let img: gridcraft::Image32 = load_image(&path, ChannelPolicy::Gray).unwrap();
        assert_eq!(img.bit_depth(), BitDepth::Eight, "{name}");
        let want: Vec<f32> = buf.pixels().map(|p| f32::from(p[0])).collect();
        assert_eq!(img.pixels(), &want[..], "{name}");
    }
}

#[test]
fn rgb_policies() {
    let dir = tempfile::tempdir().unwrap();
    let buf: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::from_fn(11, 13, |x, y| {
        Rgb([pattern(x, y, 2) as u16, pattern(x, y, 3) as u16, pattern(x, y, 4) as u16])
    });
    for name in ["c.png", "c.tif"] {
        let path = dir.path().join(name);
        buf.save(&path).unwrap();
        assert!(matches!(load_image::<f64>(&path, ChannelPolicy::Gray), Err(Error::UnsupportedFormat(_))), "{name}");
        let red: Image = load_image(&path, ChannelPolicy::Red).unwrap();
        let green: Image = load_image(&path, ChannelPolicy::Green).unwrap();
        let luma: Image = load_image(&path, ChannelPolicy::Luminance).unwrap();
        for (x, y, p) in buf.enumerate_pixels() {
            let (x, y) = (x as usize, y as usize);
            let [r, g, b] = p.0.map(f64::from);
            assert_eq!(red.get(x, y), r);
            assert_eq!(green.get(x, y), g);
            assert!((luma.get(x, y) - (0.299 * r + 0.587 * g + 0.114 * b)).abs() < 1e-9);
        }
    }
}

#[test]
fn png16_written_here_reads_back_in_image() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.png");
    let img = Image::from_fn(19, 8, |x, y| pattern(x as u32, y as u32, 5) as f64).unwrap();
    save_png16(&img, &path).unwrap();
    let back = image::open(&path).unwrap().into_luma16();
    for (x, y, p) in back.enumerate_pixels() {
        assert_eq!(f64::from(p[0]), img.get(x as usize, y as usize));
    }
}
