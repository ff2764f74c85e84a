//! The shipped networks: int8 VGG16, AlexNet and MobileNet v1, plus the
//! reference STM32F746 hardware profile. Activations and pooling are fused
//! into the layer that produces them.

use super::{HardwareProfile, NnSpec};

pub const VGG16_JSON: &str = include_str!("../../models/vgg16.json");
pub const ALEXNET_JSON: &str = include_str!("../../models/alexnet.json");
pub const MOBILENET_JSON: &str = include_str!("../../models/mobilenet.json");
pub const STM32F746_JSON: &str = include_str!("../../models/stm32f746.json");

pub const NAMES: [&str; 3] = ["vgg16", "alexnet", "mobilenet"];

pub fn vgg16() -> NnSpec {
    NnSpec::from_json(VGG16_JSON).expect("shipped vgg16 spec is valid")
}

pub fn alexnet() -> NnSpec {
    NnSpec::from_json(ALEXNET_JSON).expect("shipped alexnet spec is valid")
}

pub fn mobilenet() -> NnSpec {
    NnSpec::from_json(MOBILENET_JSON).expect("shipped mobilenet spec is valid")
}

pub fn by_name(name: &str) -> Option<NnSpec> {
    match name.to_ascii_lowercase().as_str() {
        "vgg16" | "vgg" => Some(vgg16()),
        "alexnet" => Some(alexnet()),
        "mobilenet" | "mobilenet_v1" => Some(mobilenet()),
        _ => None,
    }
}

pub fn stm32f746() -> HardwareProfile {
    HardwareProfile::from_json(STM32F746_JSON).expect("shipped hardware profile is valid")
}
