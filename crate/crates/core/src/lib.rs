pub mod addr;
pub mod attack;
pub mod campaign;
pub mod codec;
pub mod forge;
pub mod pcap;
pub mod rx;
pub mod sim;
pub mod tx;
